#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "idstyle/checkpoint.hpp"
#include "idstyle/config.hpp"
#include "idstyle/evaluation.hpp"
#include "idstyle/plotting.hpp"
#include "idstyle/trainer.hpp"
#include "idstyle/world.hpp"

namespace idstyle::cli {

namespace {

/// Bad command-line content detected after CLI11 parsing (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDefaultSeed = 7;

std::vector<int> parse_attr_spec(const std::string& spec, const TrainConfig& config) {
  std::vector<int> attrs(static_cast<std::size_t>(config.world.attributes), 0);
  std::stringstream ss(spec);
  std::string item;
  int given = 0;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("malformed --attr entry '" + item + "' (expected name=+1 or name=-1)");
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    int v = 0;
    if (value == "+1" || value == "1") v = 1;
    else if (value == "-1") v = -1;
    else throw UsageError("attribute value for '" + name + "' must be +1 or -1, got '" + value + "'");
    int m = 0;
    try {
      m = config.attribute_index(name);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    if (attrs[static_cast<std::size_t>(m)] != 0) throw UsageError("attribute '" + name + "' given twice");
    attrs[static_cast<std::size_t>(m)] = v;
    ++given;
  }
  if (given == 0) throw UsageError("--attr needs at least one name=value entry");
  return attrs;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    is.imbue(std::locale::classic());
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("malformed ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " must not be empty");
  return out;
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("file not found: " + path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.imbue(std::locale::classic());
  return out;
}

Checkpoint load_ckpt(const std::string& path) {
  require_file(path);
  return load_checkpoint(path);
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << std::fixed << std::setprecision(4);
  for (const auto& a : r.attributes) {
    out << "  " << std::left << std::setw(10) << a.name << std::right << " accuracy " << a.accuracy()
        << "  identity " << a.identity_similarity << '\n';
  }
  out << "mean accuracy " << r.mean_accuracy << "  identity similarity " << r.identity_similarity
      << "  neighborhood distance " << r.neighborhood_distance << "  (" << r.samples << " samples, seed " << r.seed
      << ")\n";
  out << std::defaultfloat;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-direction editing laboratory: train, edit, evaluate and analyze"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_path, out_path, ckpt_path, latent_path, attr_spec, csv_path, svg_path;
  std::string k_list, intensities = "1";
  int n_samples = 1000;
  std::uint64_t seed = kDefaultSeed;
  int log_every = 500;
  bool multi = false;
  int gc_configs = 20;
  double gc_eps = 1e-6;
  int gc_batch = 2;

  auto* train_cmd = app.add_subcommand("train", "Train an editor against the synthetic world");
  train_cmd->add_option("--config", config_path, "key=value config file")->required();
  train_cmd->add_option("--out", out_path, "checkpoint to write")->required();
  train_cmd->add_option("--log-every", log_every, "print losses every N steps (0 = quiet)");

  auto* edit = app.add_subcommand("edit", "Edit a latent code");
  edit->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  edit->add_option("--latent", latent_path, "input latent file")->required();
  edit->add_option("--attr", attr_spec, "name=+1|-1[,name=+1|-1...]")->required();
  edit->add_flag("--multi", multi, "merge several attribute edits by elementwise absmax");
  edit->add_option("--out", out_path, "output latent file")->required();

  auto* eval = app.add_subcommand("eval", "Manipulation accuracy and identity similarity");
  eval->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  eval->add_option("--n", n_samples, "held-out samples");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--csv", csv_path, "CSV report path");

  auto* angles = app.add_subcommand("analyze-angles", "Pairwise angles between global directions");
  angles->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  angles->add_option("--csv", csv_path, "CSV output path");

  auto* topk = app.add_subcommand("analyze-topk", "Top-k filtering and intensity sweeps");
  topk->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  topk->add_option("--k-list", k_list, "comma-separated k values")->required();
  topk->add_option("--intensities", intensities, "comma-separated intensities (default 1)");
  topk->add_option("--n", n_samples, "held-out samples per point");
  topk->add_option("--seed", seed, "evaluation seed");
  topk->add_option("--csv", csv_path, "CSV output path");
  topk->add_option("--svg", svg_path, "SVG chart output path");

  auto* world_build = app.add_subcommand("world-build", "Build the synthetic world and check its invariants");
  world_build->add_option("--config", config_path, "key=value config file")->required();
  world_build->add_option("--out", out_path, "record file for the world tensors");

  auto* sample_cmd = app.add_subcommand("sample-latent", "Draw a held-out W+ latent from a checkpoint's world");
  sample_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  sample_cmd->add_option("--seed", seed, "sampling seed");
  sample_cmd->add_option("--out", out_path, "output latent file")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Verify objective gradients by finite differences");
  gradcheck->add_option("--config", config_path, "key=value config file")->required();
  gradcheck->add_option("--configs", gc_configs, "random configurations");
  gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  gradcheck->add_option("--batch", gc_batch, "samples per configuration");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      require_file(config_path);
      const TrainConfig config = load_config(config_path);
      const auto start = std::chrono::steady_clock::now();
      TrainResult result = train(config, [&](int step, const LossReport& r) {
        if (log_every > 0 && (step % log_every == 0 || step == 1)) {
          out << "step " << step << "  total " << r.total << "  class " << r.terms.classification << "  nb "
              << r.terms.neighborhood << "  sparsity " << r.terms.sparsity << "  direction " << r.terms.direction
              << "  id " << r.terms.identity << '\n';
        }
      });
      save_checkpoint(out_path, result.checkpoint);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out << "wrote " << out_path << " after " << config.iterations << " steps (" << std::fixed
          << std::setprecision(1) << secs << " s)\n"
          << std::defaultfloat;
    } else if (edit->parsed()) {
      const Checkpoint ckpt = load_ckpt(ckpt_path);
      const std::vector<int> attrs = parse_attr_spec(attr_spec, ckpt.config);
      const int nonzero = static_cast<int>(std::count_if(attrs.begin(), attrs.end(), [](int a) { return a != 0; }));
      if (nonzero > 1 && !multi) throw UsageError("several attributes given; pass --multi to merge them");
      require_file(latent_path);
      const Matrix latent = read_latent(latent_path);
      const auto& dims = ckpt.config.world;
      if (latent.rows() != dims.layers || latent.cols() != dims.dim) {
        throw std::runtime_error("dimension mismatch: latent is (" + std::to_string(latent.rows()) + "x" +
                                 std::to_string(latent.cols()) + ") but checkpoint expects (" +
                                 std::to_string(dims.layers) + "x" + std::to_string(dims.dim) + ")");
      }
      const Editor editor = ckpt.editor();
      Matrix edited;
      if (multi) {
        edited = editor.edit_multi(latent, attrs);
      } else {
        const auto m = static_cast<int>(std::find_if(attrs.begin(), attrs.end(), [](int a) { return a != 0; }) -
                                        attrs.begin());
        edited = editor.edit_single(latent, m, attrs[static_cast<std::size_t>(m)]).edited;
      }
      write_latent(out_path, edited);
      const Matrix before = ckpt.world.classify(ckpt.world.generate(latent));
      const Matrix after = ckpt.world.classify(ckpt.world.generate(edited));
      out << "attribute logits before -> after\n";
      for (int m = 0; m < dims.attributes; ++m) {
        out << "  " << ckpt.config.attribute_names[static_cast<std::size_t>(m)] << ' ' << before(0, m) << " -> "
            << after(0, m) << '\n';
      }
      out << "identity similarity " << identity_similarity(ckpt.world, latent, edited) << '\n';
    } else if (eval->parsed()) {
      const Checkpoint ckpt = load_ckpt(ckpt_path);
      const EvalReport report = evaluate(ckpt, n_samples, seed);
      print_report(out, report);
      if (!csv_path.empty()) {
        auto f = open_output(csv_path);
        write_eval_csv(f, report);
      }
    } else if (angles->parsed()) {
      const Checkpoint ckpt = load_ckpt(ckpt_path);
      const Matrix a = angle_matrix(ckpt);
      write_angles_csv(out, a, ckpt.config.attribute_names);
      if (!csv_path.empty()) {
        auto f = open_output(csv_path);
        write_angles_csv(f, a, ckpt.config.attribute_names);
      }
    } else if (topk->parsed()) {
      const auto ks = parse_list<int>(k_list, "--k-list");
      const auto xs = parse_list<double>(intensities, "--intensities");
      const Checkpoint ckpt = load_ckpt(ckpt_path);
      for (int k : ks) {
        if (k < 0 || k > ckpt.config.world.dim) {
          throw UsageError("k=" + std::to_string(k) + " outside [0, " + std::to_string(ckpt.config.world.dim) + "]");
        }
      }
      for (double x : xs) {
        if (!(x > 0)) throw UsageError("intensities must be positive");
      }
      const SweepResult result = sweep(ckpt, ks, xs, n_samples, seed);
      write_sweep_csv(out, result);
      if (!csv_path.empty()) {
        auto f = open_output(csv_path);
        write_sweep_csv(f, result);
      }
      if (!svg_path.empty()) {
        auto f = open_output(svg_path);
        f << render_svg(sweep_charts(result));
      }
    } else if (world_build->parsed()) {
      require_file(config_path);
      const TrainConfig config = load_config(config_path);
      const SyntheticWorld world = build_world(config.world);
      double max_overlap = 0, max_leak = 0;
      for (int m = 0; m < config.world.attributes; ++m) {
        const Matrix au = world.mixing * world.planted.row(m).transpose();
        max_leak = std::max(max_leak, (world.identity * au).cwiseAbs().maxCoeff());
        for (int o = m + 1; o < config.world.attributes; ++o) {
          max_overlap = std::max(max_overlap, std::abs(world.planted.row(m).dot(world.planted.row(o))));
        }
      }
      out << "world: L=" << config.world.layers << " d=" << config.world.dim << " M=" << config.world.attributes
          << " image_dim=" << config.world.image_dim << " identity_dim=" << config.world.identity_dim << '\n'
          << "max |u_m . u_m'| = " << max_overlap << "\nmax |Q A u_m| = " << max_leak << '\n';
      if (!out_path.empty()) {
        RecordFile f;
        f.header = to_text(config);
        f.records.push_back(TensorRecord::from_matrix("world.rho", world.rho));
        f.records.push_back(TensorRecord::from_matrix("world.mixing", world.mixing));
        f.records.push_back(TensorRecord::from_matrix("world.heads", world.heads));
        f.records.push_back(TensorRecord::from_matrix("world.biases", world.biases));
        f.records.push_back(TensorRecord::from_matrix("world.identity", world.identity));
        f.records.push_back(TensorRecord::from_matrix("world.planted", world.planted));
        write_record_file(out_path, f);
      }
    } else if (sample_cmd->parsed()) {
      const Checkpoint ckpt = load_ckpt(ckpt_path);
      Rng rng = Rng::stream(seed, Stream::Latent);
      write_latent(out_path, ckpt.world.sample_wplus(rng));
    } else if (gradcheck->parsed()) {
      require_file(config_path);
      const TrainConfig config = load_config(config_path);
      const GradCheckSummary s = gradcheck_objective(config, gc_configs, gc_eps, gc_batch);
      out << std::scientific << std::setprecision(3);
      for (std::size_t i = 0; i < s.per_configuration.size(); ++i) {
        out << "configuration " << i + 1 << ": max relative error " << s.per_configuration[i] << '\n';
      }
      out << "overall max relative error " << s.max_relative_error << " over " << s.configurations
          << " configurations (" << s.rejected_points << " points redrawn near kinks)\n"
          << std::defaultfloat;
      if (!(s.max_relative_error < 1e-4)) {
        err << "gradient check failed: max relative error " << s.max_relative_error << " >= 1e-4\n";
        return kExitFailure;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace idstyle::cli
