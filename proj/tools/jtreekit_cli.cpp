#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jtreekit/c_api.h"

namespace {

enum Exit { kOk = 0, kConfig = 1, kMissing = 2, kRuntime = 3 };

int exit_code(jtk_status s) {
  if (s == JTK_OK) return kOk;
  if (s == JTK_E_CONFIG) return kConfig;
  if (s == JTK_E_MISSING_ARTIFACT) return kMissing;
  return kRuntime;
}

int report(jtk_status s) {
  if (s == JTK_OK) return kOk;
  const int code = exit_code(s);
  std::fprintf(stderr, "E%d: %s: %s\n", code, jtk_status_name(s), jtk_last_error());
  return code;
}

void log_line(const char* line, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "%s\n", line);
}

struct Options {
  std::string config;
  std::vector<std::string> sets;
  int workers = 0;
  bool overwrite = false;
  bool quiet = false;
};

struct ConfigHandle {
  jtk_config* c = nullptr;
  ~ConfigHandle() { jtk_config_free(c); }
};

jtk_status open_config(const Options& o, ConfigHandle& h) {
  jtk_status s = o.config.empty() ? jtk_config_default(&h.c) : jtk_config_load(o.config.c_str(), &h.c);
  if (s != JTK_OK) return s;
  if ((s = jtk_config_apply_env(h.c)) != JTK_OK) return s;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "E1: ConfigError: --set expects key=value, got '%s'\n", kv.c_str());
      return JTK_E_CONFIG;
    }
    if ((s = jtk_config_set(h.c, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != JTK_OK) return s;
  }
  if (o.workers > 0) s = jtk_config_set(h.c, "run.workers", std::to_string(o.workers).c_str());
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Junction-tree molecule generation: vocabulary, autoencoder and latent diffusion training, sampling, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-c,--config", o.config, "Run configuration (key = value under [section] headers)");
  app.add_option("--set", o.sets, "Override a configuration key, e.g. --set train.epochs=5")->take_all();
  app.add_option("--workers", o.workers, "Worker threads for embedding and decoding")->check(CLI::PositiveNumber);
  app.add_flag("--overwrite", o.overwrite, "Replace existing output files");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress lines");

  auto* vocab = app.add_subcommand("vocab", "Build the fragment vocabulary from paths.dataset into paths.vocab");
  auto* train = app.add_subcommand("train-vae", "Teacher-forced autoencoder training; writes paths.checkpoint every epoch");
  auto* embed = app.add_subcommand("embed", "Encode paths.dataset into the latent dump paths.latents");
  std::string projection;
  embed->add_option("--projection", projection, "Also write a 2-D PCA projection (x,y,label CSV)");
  auto* tdiff = app.add_subcommand("train-diffusion", "Train the latent diffusion model from paths.latents into paths.diffusion");
  std::string loss;
  tdiff->add_option("--loss", loss, "Noise regression loss")->check(CLI::IsMember({"mse", "mae"}));
  auto* samp = app.add_subcommand("sample", "Sample molecules: diffusion latent, decoder, assembler");
  int n = 100;
  std::string sample_out;
  samp->add_option("-n,--count", n, "Number of molecules")->check(CLI::PositiveNumber);
  samp->add_option("-o,--output", sample_out, "SMILES output file")->required();
  auto* ev = app.add_subcommand("eval", "Validity, uniqueness, novelty and internal diversity of a sample file");
  std::string samples, report_path, records;
  std::size_t unique_at = 0;
  ev->add_option("samples", samples, "Sample file (one SMILES per line)")->required();
  ev->add_option("--report", report_path, "Write metric<TAB>value lines");
  ev->add_option("--records", records, "Write per-molecule CSV");
  ev->add_option("--unique-at", unique_at, "Also report Unique@k");
  auto* interp = app.add_subcommand("interpolate", "Decode k points on the latent segment between two molecules");
  std::string smiles_a, smiles_b, interp_out;
  int k = 4;
  interp->add_option("first", smiles_a, "First SMILES")->required();
  interp->add_option("second", smiles_b, "Second SMILES")->required();
  interp->add_option("-k", k, "Number of interpolants")->check(CLI::PositiveNumber);
  interp->add_option("-o,--output", interp_out, "SMILES output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "E1: ConfigError: %s\n", e.what());
    return kConfig;
  }

  ConfigHandle h;
  if (const jtk_status s = open_config(o, h); s != JTK_OK) return report(s);
  if (tdiff->parsed() && !loss.empty()) {
    if (const jtk_status s = jtk_config_set(h.c, "diffusion.loss", loss.c_str()); s != JTK_OK) return report(s);
  }
  const int ow = o.overwrite ? 1 : 0;
  void* quiet = &o.quiet;

  if (vocab->parsed()) return report(jtk_build_vocab(h.c, ow));
  if (train->parsed()) {
    jtk_train_report r{};
    const jtk_status s = jtk_train_vae(h.c, ow, log_line, quiet, &r);
    if (s == JTK_OK) {
      std::printf("examples\t%zu\nskipped\t%zu\ninitial_loss\t%.6g\nfinal_loss\t%.6g\ntoken_accuracy\t%.6g\n", r.examples, r.skipped,
                  r.initial_loss, r.final_loss, r.token_accuracy);
    }
    return report(s);
  }
  if (embed->parsed()) return report(jtk_embed(h.c, projection.empty() ? nullptr : projection.c_str(), ow, log_line, quiet));
  if (tdiff->parsed()) {
    double final_loss = 0.0;
    const jtk_status s = jtk_train_diffusion(h.c, ow, log_line, quiet, &final_loss);
    if (s == JTK_OK) std::printf("final_loss\t%.6g\n", final_loss);
    return report(s);
  }
  if (samp->parsed()) {
    jtk_sample_report r{};
    const jtk_status s = jtk_sample(h.c, n, sample_out.c_str(), ow, log_line, quiet, &r);
    if (s == JTK_OK) std::printf("requested\t%zu\nvalid\t%zu\npartial\t%zu\ntruncated\t%zu\n", r.requested, r.valid, r.partial, r.truncated);
    return report(s);
  }
  if (ev->parsed()) {
    jtk_eval_report r{};
    const jtk_status s = jtk_eval(h.c, samples.c_str(), unique_at, report_path.empty() ? nullptr : report_path.c_str(),
                                  records.empty() ? nullptr : records.c_str(), ow, &r);
    if (s == JTK_OK) {
      std::printf("requested\t%zu\nvalid_count\t%zu\nvalid\t%.10g\nunique\t%.10g\n", r.requested, r.valid_count, r.valid, r.unique);
      if (r.unique_at_k >= 0.0) std::printf("unique@%zu\t%.10g\n", unique_at, r.unique_at_k);
      std::printf("novelty\t%.10g\nintdiv1\t%.10g\nintdiv2\t%.10g\n", r.novelty, r.intdiv1, r.intdiv2);
    }
    return report(s);
  }
  if (interp->parsed()) return report(jtk_interpolate(h.c, smiles_a.c_str(), smiles_b.c_str(), k, interp_out.c_str(), ow));
  return kConfig;
}
