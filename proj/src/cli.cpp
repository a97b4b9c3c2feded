#include "pbcert/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "pbcert/atlas.hpp"
#include "pbcert/checkpoint.hpp"
#include "pbcert/config.hpp"
#include "pbcert/dataset.hpp"
#include "pbcert/kl.hpp"
#include "pbcert/trainer.hpp"

namespace pbcert {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

int run_bounds(double p, double K, std::ostream& out) {
  const AtlasCell cell = compare_bounds(p, K);
  out << "kind,value\n";
  for (BoundKind kind : kAllKinds) out << to_string(kind) << ',' << g17(cell.value(kind)) << '\n';
  out << "tightest," << to_string(cell.tightest) << '\n';
  return 0;
}

// Writes to <out-dir>/<name> when an out-dir was given, stdout otherwise.
template <typename Writer>
void emit(const GlobalFlags& flags, const std::string& name, std::ostream& out, Writer&& write) {
  if (flags.out_dir.empty()) {
    write(out);
    return;
  }
  std::filesystem::create_directories(flags.out_dir);
  const auto path = std::filesystem::path(flags.out_dir) / name;
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  write(file);
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PAC-Bayes risk certificates for stochastic MLPs"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the RNG seed")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", flags.out_dir, "Directory for output files");
  app.add_flag("--quiet", flags.quiet, "Suppress progress and summaries");

  double p = 0.0;
  double K = 0.0;
  auto* bounds = app.add_subcommand("bounds", "Evaluate every bound kind at (p, K)");
  bounds->add_option("--p", p, "Empirical risk")->required()->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--K", K, "Complexity term")->required()->check(CLI::NonNegativeNumber);

  double p_lo = AtlasGridDefaults::p_min;
  double p_hi = AtlasGridDefaults::p_max;
  double k_lo = AtlasGridDefaults::k_min;
  double k_hi = AtlasGridDefaults::k_max;
  std::size_t grid = AtlasGridDefaults::points;
  auto* atlas = app.add_subcommand("atlas", "Tightest-bound map over a log-spaced (p, K) grid");
  atlas->add_option("--p-min", p_lo)->check(CLI::Range(0.0, 1.0));
  atlas->add_option("--p-max", p_hi)->check(CLI::Range(0.0, 1.0));
  atlas->add_option("--k-min", k_lo)->check(CLI::PositiveNumber);
  atlas->add_option("--k-max", k_hi)->check(CLI::PositiveNumber);
  atlas->add_option("--grid", grid, "Points per axis")->check(CLI::Range(1, 100000));

  double curve_p = 0.174;
  auto* curves = app.add_subcommand("curves", "Every bound as a function of K at fixed p");
  curves->add_option("--p", curve_p)->check(CLI::Range(0.0, 1.0));
  curves->add_option("--k-min", k_lo)->check(CLI::PositiveNumber);
  curves->add_option("--k-max", k_hi)->check(CLI::PositiveNumber);
  curves->add_option("--grid", grid)->check(CLI::Range(1, 100000));

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "Train a posterior from a config file");
  train_cmd->add_option("--config", config_path, "Key-value config file")->required();

  std::string checkpoint_path;
  std::string images_path;
  std::string labels_path;
  std::size_t n_rows = 0;
  std::size_t mc_samples = 10000;
  double delta = 0.025;
  double delta_mc = 0.01;
  double p_min = 1e-4;
  std::string bound_name = "maurer";
  std::string loss_name = "zero_one";
  auto* certify = app.add_subcommand("certify", "Monte Carlo risk certificate for a checkpoint");
  certify->add_option("--checkpoint", checkpoint_path)->required();
  certify->add_option("--images", images_path, "IDX image file of the training set")->required();
  certify->add_option("--labels", labels_path, "IDX label file of the training set")->required();
  certify->add_option("--n", n_rows, "Use the first n rows (default: all)");
  certify->add_option("--mc-samples", mc_samples)->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
  certify->add_option("--delta", delta)->check(CLI::Range(0.0, 1.0));
  certify->add_option("--delta-mc", delta_mc)->check(CLI::Range(0.0, 1.0));
  certify->add_option("--p-min", p_min)->check(CLI::Range(0.0, 0.1));
  certify->add_option("--bound", bound_name, "maurer, pinsker, pbq, ts, trp or rts");
  certify->add_option("--loss", loss_name, "zero_one, bounded_xe or both");

  std::vector<std::string> argv_store;
  argv_store.push_back("pbcert");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    err << app.help();
    return code == 0 ? 1 : code;
  }
  if (seed_opt->count() > 0) flags.seed = seed_value;

  try {
    if (*bounds) {
      if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("--p must lie in (0, 1)");
      return run_bounds(p, K, out);
    }
    if (*atlas) {
      if (!(p_lo > 0.0 && p_hi < 1.0 && p_lo <= p_hi)) {
        throw std::invalid_argument("--p-min/--p-max must satisfy 0 < p-min <= p-max < 1");
      }
      const auto ps = log_space(p_lo, p_hi, grid);
      const auto ks = log_space(k_lo, k_hi, grid);
      const auto cells = tightest_map(ps, ks);
      emit(flags, "atlas.csv", out, [&](std::ostream& o) { write_atlas_csv(o, cells); });
      return 0;
    }
    if (*curves) {
      if (!(curve_p > 0.0 && curve_p < 1.0)) throw std::invalid_argument("--p must lie in (0, 1)");
      const auto ks = log_space(k_lo, k_hi, grid);
      const auto rows = emit_curves(curve_p, ks);
      emit(flags, "curves.csv", out, [&](std::ostream& o) { write_curves_csv(o, curve_p, rows); });
      return 0;
    }
    if (*train_cmd) {
      TrainConfig config = load_config(config_path);
      if (flags.seed) config.seed = *flags.seed;
      if (config.train_images.empty() || config.train_labels.empty()) {
        throw std::invalid_argument("config: train_images and train_labels are required");
      }
      const Dataset data = load_mnist(config.train_images, config.train_labels);
      const std::filesystem::path dir = flags.out_dir.empty() ? "." : flags.out_dir;
      std::filesystem::create_directories(dir);
      std::ofstream history(dir / "history.csv");
      if (!history) throw std::runtime_error("cannot write " + (dir / "history.csv").string());
      write_history_header(history);
      const auto result = train(config, data, [&](const HistoryRow& row) {
        write_history_row(history, row);
        history.flush();
        if (!flags.quiet) {
          err << "epoch " << row.epoch << " xe " << row.emp_xe << " 01 " << row.emp_01
              << " KL/n " << row.kl_over_n << " slope " << row.slope << '\n';
        }
      });
      save_checkpoint(dir / "checkpoint.bin", result.posterior);
      if (!flags.quiet) {
        out << "wrote " << (dir / "checkpoint.bin").string() << " and "
            << (dir / "history.csv").string() << '\n';
        if (result.degenerate_steps > 0) {
          out << result.degenerate_steps << " steps fell back to the pure-KL direction\n";
        }
      }
      return 0;
    }
    if (*certify) {
      const GaussianPosterior post = load_checkpoint(checkpoint_path);
      Dataset data = load_mnist(images_path, labels_path);
      if (n_rows > 0) {
        if (n_rows > data.rows) throw std::invalid_argument("--n exceeds the dataset size");
        data = data.head(n_rows);
      }
      const BoundKind bound = parse_bound_kind(bound_name);
      std::vector<LossKind> losses;
      if (loss_name == "both") {
        losses = {LossKind::ZeroOne, LossKind::BoundedXE};
      } else {
        losses = {parse_loss_kind(loss_name)};
      }
      const std::uint64_t mc_seed = derive_seed(flags.seed.value_or(post.seed()), 3);
      const auto started = std::chrono::steady_clock::now();
      const McEstimate est = mc_empirical_risks(post, data, mc_samples, mc_seed, p_min);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      const double kl = gaussian_kl(post);

      std::vector<Certificate> certs;
      for (LossKind loss : losses) {
        const double mean = loss == LossKind::ZeroOne ? est.mean_01 : est.mean_xe;
        const double emp = mc_bound_from_mean(mean, mc_samples, delta_mc);
        certs.push_back(final_certificate(emp, kl, data.rows, delta, bound, loss, delta_mc));
      }
      auto write_all = [&](std::ostream& o) {
        write_certificate_header(o);
        for (const auto& c : certs) write_certificate_row(o, c);
      };
      write_all(out);
      if (!flags.out_dir.empty()) emit(flags, "certificate.csv", out, write_all);
      if (!flags.quiet) {
        for (std::size_t i = 0; i < certs.size(); ++i) {
          const auto& c = certs[i];
          const double mean = c.loss_kind == LossKind::ZeroOne ? est.mean_01 : est.mean_xe;
          err << to_string(c.loss_kind) << ": MC mean " << mean << " over " << mc_samples
              << " draws, empirical bound " << c.emp_risk_bound << ", KL/n " << c.kl_over_n
              << ", " << to_string(c.bound_kind) << " bound " << c.bound_value
              << (c.vacuous ? " (vacuous)" : "") << " at confidence " << 1.0 - c.delta_total
              << '\n';
        }
        err << "Monte Carlo evaluation took " << seconds << " s\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace pbcert
