#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infoclip/checkpoint.hpp"
#include "infoclip/config.hpp"
#include "infoclip/entropy.hpp"
#include "infoclip/errors.hpp"
#include "infoclip/gradcheck.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/metrics_io.hpp"
#include "infoclip/synth.hpp"
#include "infoclip/tensor_io.hpp"
#include "infoclip/train.hpp"
#include "infoclip/version.hpp"

namespace infoclip {

namespace detail {

inline EntropyMethod method_from_name(const std::string& name) {
  return name == "eigen" ? EntropyMethod::Eigen : EntropyMethod::Frobenius;
}

inline NormalizationMode norm_from_name(const std::string& name) {
  return name == "diagonal" ? NormalizationMode::Diagonal : NormalizationMode::Trace;
}

inline GramMatrix gram_from_file(const std::string& path, NormalizationMode norm) {
  return gram_from_features(read_feature_batch(path), Kernel::PolynomialDegree1, norm);
}

inline void write_scene(const std::string& dir, const std::string& prefix,
                        const SyntheticScene& scene) {
  write_tensor(dir + "/" + prefix + "_patches.ictf", scene.patch_embeddings_teacher.values());
  write_tensor(dir + "/" + prefix + "_classes.ictf", scene.class_embeddings_teacher.values());
  std::vector<double> labels(scene.labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<double>(scene.labels[i]);
  write_tensor(dir + "/" + prefix + "_labels.ictf", labels);
  std::vector<double> seen(scene.seen_mask.size());
  for (std::size_t i = 0; i < seen.size(); ++i) seen[i] = scene.seen_mask[i] ? 1.0 : 0.0;
  write_tensor(dir + "/" + prefix + "_seen.ictf", seen);
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory " + dir + ": " + ec.message());
}

} // namespace detail

/// The command-line surface. Exit codes: 0 success, 1 usage error, 2
/// data/format error, 3 numerical or convergence error.
inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"information-theoretic alignment toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  struct {
    std::vector<std::string> files;
    double alpha = 2.0;
    std::string method = "frobenius";
    std::string norm = "trace";
    bool include_teacher_entropy = false;
    std::string params_path, adapters_path, config_path, out_path;
    std::uint64_t seed = 0;
    double tol = 1e-4;
  } o;

  const auto add_entropy_flags = [&](CLI::App* sub) {
    sub->add_option("--alpha", o.alpha, "entropy order (2 enables the Frobenius method)");
    sub->add_option("--method", o.method, "eigen or frobenius")
        ->check(CLI::IsMember({"eigen", "frobenius"}));
    sub->add_option("--norm", o.norm, "Gram normalization: trace or diagonal")
        ->check(CLI::IsMember({"trace", "diagonal"}));
  };

  CLI::App* c_entropy = app.add_subcommand("entropy", "entropy of one feature batch");
  c_entropy->add_option("file", o.files, "feature tensor (n x d)")->required()->expected(1);
  add_entropy_flags(c_entropy);
  c_entropy->callback([&] {
    const EntropySpec spec{o.alpha, detail::method_from_name(o.method)};
    const GramMatrix g = detail::gram_from_file(o.files[0], detail::norm_from_name(o.norm));
    out << format_real(renyi_entropy(g, spec)) << "\n";
  });

  CLI::App* c_joint = app.add_subcommand("joint", "joint entropy of several feature batches");
  c_joint->add_option("files", o.files, "feature tensors with a shared sample count")
      ->required()
      ->expected(2, -1);
  add_entropy_flags(c_joint);
  c_joint->callback([&] {
    const EntropySpec spec{o.alpha, detail::method_from_name(o.method)};
    std::vector<GramMatrix> grams;
    grams.reserve(o.files.size());
    for (const std::string& f : o.files)
      grams.push_back(detail::gram_from_file(f, detail::norm_from_name(o.norm)));
    out << format_real(joint_entropy(grams, spec)) << "\n";
  });

  CLI::App* c_mi = app.add_subcommand("mi", "mutual information between two feature batches");
  c_mi->add_option("files", o.files, "two feature tensors")->required()->expected(2);
  add_entropy_flags(c_mi);
  c_mi->callback([&] {
    const EntropySpec spec{o.alpha, detail::method_from_name(o.method)};
    const NormalizationMode norm = detail::norm_from_name(o.norm);
    out << format_real(mutual_information(detail::gram_from_file(o.files[0], norm),
                                          detail::gram_from_file(o.files[1], norm), spec))
        << "\n";
  });

  CLI::App* c_lc = app.add_subcommand("loss-c", "compression loss of a (dv, dl, r) triplet");
  c_lc->add_option("files", o.files, "dv, dl_expanded, r feature tensors")
      ->required()
      ->expected(3);
  c_lc->add_flag("--include-teacher-entropy", o.include_teacher_entropy,
                 "add the constant teacher-entropy term");
  c_lc->callback([&] {
    out << format_real(compression_loss(read_feature_batch(o.files[0]),
                                        read_feature_batch(o.files[1]),
                                        read_feature_batch(o.files[2]),
                                        o.include_teacher_entropy))
        << "\n";
  });

  CLI::App* c_ld = app.add_subcommand("loss-d", "distillation loss of two alignment batches");
  c_ld->add_option("files", o.files, "teacher and student alignment tensors")
      ->required()
      ->expected(2);
  c_ld->callback([&] {
    out << format_real(
               distillation_loss(read_feature_batch(o.files[0]), read_feature_batch(o.files[1])))
        << "\n";
  });

  CLI::App* c_lpam = app.add_subcommand("lpam", "alignment map from features and a checkpoint");
  c_lpam->add_option("files", o.files, "dv and dl feature tensors")->required()->expected(2);
  c_lpam->add_option("--params", o.params_path, "alignment parameter checkpoint")->required();
  c_lpam->add_option("--out", o.out_path, "output tensor path for the score map")->required();
  c_lpam->callback([&] {
    const LpamParams p = load_lpam(o.params_path);
    const LpamForward f =
        lpam_forward(read_feature_batch(o.files[0]), read_feature_batch(o.files[1]), p);
    write_tensor(o.out_path, f.map.scores);
  });

  CLI::App* c_grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  c_grad->add_option("--seed", o.seed, "base seed for the generated instances");
  c_grad->add_option("--tol", o.tol, "maximum acceptable relative error");
  c_grad->callback([&] {
    const GradCheckReport report = run_gradient_checks(o.seed);
    out << format_real(report.max_rel_error) << "\n";
    if (report.max_rel_error > o.tol) {
      err << "gradient check failed: max relative error " << format_real(report.max_rel_error)
          << " exceeds " << format_real(o.tol) << "\n";
      rc = 3;
    }
  });

  CLI::App* c_synth = app.add_subcommand("synth", "generate scene tensors from a config");
  c_synth->add_option("--config", o.config_path, "run configuration file")->required();
  c_synth->add_option("--out", o.out_path, "output directory")->required();
  c_synth->callback([&] {
    const RunConfig cfg = load_config(o.config_path);
    detail::ensure_dir(o.out_path);
    detail::write_scene(
        o.out_path, "train",
        generate_scene(cfg.train, derive_stream(cfg.train.seed, streams::kTrainScene),
                       SceneKind::Train));
    const std::vector<SyntheticScene> scenes = make_eval_scenes(cfg.train);
    for (std::size_t i = 0; i < scenes.size(); ++i)
      detail::write_scene(o.out_path, "eval" + std::to_string(i), scenes[i]);
  });

  CLI::App* c_train = app.add_subcommand("train", "run the distillation trainer");
  c_train->add_option("--config", o.config_path, "run configuration file")->required();
  c_train->add_option("--out", o.out_path, "output directory")->required();
  c_train->callback([&] {
    const RunConfig cfg = load_config(o.config_path);
    const TrainResult result = train_and_evaluate(cfg.train);
    detail::ensure_dir(o.out_path);
    emit_metrics(result.report, o.out_path + "/metrics.jsonl");
    write_summary(o.out_path + "/summary.txt", result.report.metrics);
    save_lpam(o.out_path + "/lpam.ictf", result.params);
    save_adapters(o.out_path + "/adapters.ictf", result.adapters);
    out << "steps " << result.report.steps.size() << "\n";
    out << "accuracy " << format_real(result.report.metrics.accuracy) << "\n";
    out << "mean_iou " << format_real(result.report.metrics.mean_iou) << "\n";
    out << "wall_seconds " << format_real(result.report.wall_seconds) << "\n";
  });

  CLI::App* c_eval = app.add_subcommand("eval", "evaluate checkpoints on the config's scenes");
  c_eval->add_option("--config", o.config_path, "run configuration file")->required();
  c_eval->add_option("--params", o.params_path, "alignment parameter checkpoint")->required();
  c_eval->add_option("--adapters", o.adapters_path, "student adapter checkpoint")->required();
  c_eval->add_option("--out", o.out_path, "output directory")->required();
  c_eval->callback([&] {
    const RunConfig cfg = load_config(o.config_path);
    const EvalMetrics m = evaluate(load_lpam(o.params_path), load_adapters(o.adapters_path),
                                   make_eval_scenes(cfg.train));
    detail::ensure_dir(o.out_path);
    write_summary(o.out_path + "/summary.txt", m);
    out << "accuracy " << format_real(m.accuracy) << "\n";
    out << "mean_iou " << format_real(m.mean_iou) << "\n";
  });

  CLI::App* c_version = app.add_subcommand("version", "print the library version");
  c_version->callback([&] { out << INFOCLIP_VERSION_STRING << "\n"; });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("infoclip");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}

} // namespace infoclip
