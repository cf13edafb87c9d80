#pragma once

#define INFOCLIP_VERSION_MAJOR 0
#define INFOCLIP_VERSION_MINOR 1
#define INFOCLIP_VERSION_PATCH 0
#define INFOCLIP_VERSION_STRING "0.1.0"
