#pragma once

// Umbrella header: the entire library in dependency order.

#include "infoclip/version.hpp"
#include "infoclip/errors.hpp"
#include "infoclip/matrix.hpp"
#include "infoclip/rng.hpp"
#include "infoclip/spectral.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/entropy.hpp"
#include "infoclip/losses.hpp"
#include "infoclip/lpam.hpp"
#include "infoclip/synth.hpp"
#include "infoclip/train.hpp"
#include "infoclip/gradcheck.hpp"
#include "infoclip/tensor_io.hpp"
#include "infoclip/checkpoint.hpp"
#include "infoclip/config.hpp"
#include "infoclip/metrics_io.hpp"
#include "infoclip/cli.hpp"
