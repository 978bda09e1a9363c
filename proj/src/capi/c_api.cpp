#include "jtreekit/c_api.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "jtreekit/dataset.hpp"
#include "jtreekit/error.hpp"
#include "jtreekit/fingerprint.hpp"
#include "jtreekit/pipeline.hpp"
#include "jtreekit/seqcodec.hpp"

struct jtk_string {
  std::string value;
};

struct jtk_mol {
  jtk::mol::MolGraph graph;
};

struct jtk_config {
  jtk::pipe::RunConfig cfg;
};

namespace {

thread_local std::string last_error;

template <class F>
jtk_status guard(F&& fn) {
  try {
    fn();
    last_error.clear();
    return JTK_OK;
  } catch (const jtk::Error& e) {
    last_error = e.what();
    return static_cast<jtk_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return JTK_E_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) jtk::fail(jtk::ErrorCode::Config, std::string(what) + " is null");
}

jtk::pipe::LogSink sink(jtk_log_fn log, void* user) {
  if (log == nullptr) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

jtk_string* make_string(std::string s) { return new jtk_string{std::move(s)}; }

}  // namespace

extern "C" {

const char* jtk_last_error(void) { return last_error.c_str(); }

const char* jtk_status_name(jtk_status s) {
  if (s == JTK_OK) return "Ok";
  if (s == JTK_E_INTERNAL) return "Internal";
  if (s < JTK_E_SYNTAX || s > JTK_E_FORMAT) return "Unknown";
  return jtk::error_code_name(static_cast<jtk::ErrorCode>(s));
}

const char* jtk_version(void) { return "0.1.0"; }

const char* jtk_string_data(const jtk_string* s) { return s == nullptr ? "" : s->value.c_str(); }
void jtk_string_free(jtk_string* s) { delete s; }

jtk_status jtk_mol_parse(const char* smiles, jtk_mol** out) {
  return guard([&] {
    need(smiles, "smiles");
    need(out, "out");
    *out = new jtk_mol{jtk::mol::parse_smiles(smiles)};
  });
}

void jtk_mol_free(jtk_mol* m) { delete m; }

jtk_status jtk_mol_canonical(const jtk_mol* m, jtk_string** out) {
  return guard([&] {
    need(m, "molecule");
    need(out, "out");
    *out = make_string(jtk::mol::canonical_smiles(m->graph));
  });
}

size_t jtk_mol_num_atoms(const jtk_mol* m) { return m == nullptr ? 0 : m->graph.num_atoms(); }

jtk_status jtk_mol_properties(const jtk_mol* m, double out[3]) {
  return guard([&] {
    need(m, "molecule");
    need(out, "out");
    const auto p = jtk::mol::properties(m->graph);
    out[0] = p.weight;
    out[1] = p.logp;
    out[2] = p.tpsa;
  });
}

jtk_status jtk_mol_tanimoto(const jtk_mol* a, const jtk_mol* b, double* out) {
  return guard([&] {
    need(a, "molecule");
    need(b, "molecule");
    need(out, "out");
    *out = jtk::mol::tanimoto(jtk::mol::fingerprint(a->graph), jtk::mol::fingerprint(b->graph));
  });
}

jtk_status jtk_mol_roundtrip(const jtk_mol* m, const char* vocab_path, int budget, jtk_string** out) {
  return guard([&] {
    need(m, "molecule");
    need(vocab_path, "vocab path");
    need(out, "out");
    jtk::pipe::require_input(vocab_path, "vocab");
    const auto vocab = jtk::jt::Vocabulary::load(vocab_path);
    const auto tree = jtk::seq::decode(jtk::seq::encode(jtk::jt::decompose(m->graph), vocab), vocab);
    jtk::assem::ScoreWeights w;
    w.match = 1.0;
    w.reference = m->graph;
    jtk::assem::MctsOptions o;
    o.budget = budget;
    *out = make_string(jtk::assem::mcts_assemble(tree, w, o).smiles);
  });
}

jtk_status jtk_config_default(jtk_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new jtk_config{};
  });
}

jtk_status jtk_config_load(const char* path, jtk_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new jtk_config{jtk::pipe::load_config(path)};
  });
}

jtk_status jtk_config_parse(const char* text, jtk_config** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new jtk_config{jtk::pipe::parse_config(text)};
  });
}

void jtk_config_free(jtk_config* c) { delete c; }

jtk_status jtk_config_set(jtk_config* c, const char* key, const char* value) {
  return guard([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    auto next = c->cfg;
    jtk::pipe::set_option(next, key, value);
    next.validate();
    c->cfg = std::move(next);
  });
}

jtk_status jtk_config_apply_env(jtk_config* c) {
  return guard([&] {
    need(c, "config");
    jtk::pipe::apply_environment(c->cfg);
  });
}

uint64_t jtk_config_seed(const jtk_config* c) { return c == nullptr ? 0 : c->cfg.seed; }

jtk_status jtk_build_vocab(const jtk_config* c, int overwrite) {
  return guard([&] {
    need(c, "config");
    jtk::pipe::require_output(c->cfg.vocab, "vocab", overwrite != 0);
    jtk::pipe::build_vocabulary(c->cfg).save(c->cfg.vocab);
  });
}

jtk_status jtk_train_vae(const jtk_config* c, int overwrite, jtk_log_fn log, void* user, jtk_train_report* out) {
  return guard([&] {
    need(c, "config");
    jtk::pipe::require_output(c->cfg.checkpoint, "checkpoint", overwrite != 0);
    const auto r = jtk::pipe::train_vae(c->cfg, sink(log, user));
    if (out != nullptr) {
      out->initial_loss = r.initial_loss;
      out->final_loss = r.epoch_loss.empty() ? r.initial_loss : r.epoch_loss.back();
      out->token_accuracy = r.token_accuracy;
      out->examples = r.examples;
      out->skipped = r.skipped;
      out->epochs = static_cast<int>(r.epoch_loss.size());
    }
  });
}

jtk_status jtk_embed(const jtk_config* c, const char* projection_csv, int overwrite, jtk_log_fn log, void* user) {
  return guard([&] {
    need(c, "config");
    jtk::pipe::require_output(c->cfg.latents, "latents", overwrite != 0);
    if (projection_csv != nullptr) jtk::pipe::require_output(projection_csv, "projection", overwrite != 0);
    const auto z = jtk::pipe::embed(c->cfg, sink(log, user));
    jtk::diff::save_latents(c->cfg.latents, z);
    if (projection_csv != nullptr) {
      const auto p = jtk::eval::pca2d(z, c->cfg.seed);
      std::vector<std::string> labels;
      for (int i = 0; i < z.rows; ++i) labels.push_back(std::to_string(i));
      jtk::eval::write_projection_csv(projection_csv, p, labels);
    }
  });
}

jtk_status jtk_train_diffusion(const jtk_config* c, int overwrite, jtk_log_fn log, void* user, double* final_loss) {
  return guard([&] {
    need(c, "config");
    jtk::pipe::require_output(c->cfg.diffusion, "diffusion weights", overwrite != 0);
    const auto losses = jtk::pipe::train_diffusion(c->cfg, sink(log, user));
    if (final_loss != nullptr) *final_loss = losses.empty() ? 0.0 : losses.back();
  });
}

jtk_status jtk_sample(const jtk_config* c, int n, const char* out_path, int overwrite, jtk_log_fn log, void* user,
                      jtk_sample_report* out) {
  return guard([&] {
    need(c, "config");
    need(out_path, "output path");
    jtk::pipe::require_output(out_path, "sample output", overwrite != 0);
    const auto samples = jtk::pipe::sample(c->cfg, n, sink(log, user));
    std::vector<std::string> lines;
    jtk_sample_report r{};
    r.requested = samples.size();
    for (const auto& s : samples) {
      lines.push_back(s.valid ? s.smiles : "?");
      r.valid += s.valid;
      r.partial += s.partial;
      r.truncated += s.truncated;
    }
    jtk::mol::write_smiles_file(out_path, lines, jtk::pipe::sample_summary(samples));
    if (out != nullptr) *out = r;
  });
}

jtk_status jtk_eval(const jtk_config* c, const char* samples_path, size_t unique_at_k, const char* report_path,
                    const char* records_csv, int overwrite, jtk_eval_report* out) {
  return guard([&] {
    need(c, "config");
    need(samples_path, "samples path");
    if (report_path != nullptr) jtk::pipe::require_output(report_path, "report", overwrite != 0);
    if (records_csv != nullptr) jtk::pipe::require_output(records_csv, "records", overwrite != 0);
    const auto r = jtk::pipe::evaluate_file(c->cfg, samples_path, unique_at_k);
    if (report_path != nullptr) jtk::eval::write_report(report_path, r);
    if (records_csv != nullptr) jtk::eval::write_records_csv(records_csv, r);
    if (out != nullptr) {
      out->requested = r.n_requested;
      out->valid_count = r.n_valid;
      out->valid = r.valid_fraction;
      out->unique = r.unique_fraction;
      out->novelty = r.novelty_fraction;
      out->intdiv1 = r.intdiv1;
      out->intdiv2 = r.intdiv2;
      out->unique_at_k = r.unique_at_k ? *r.unique_at_k : -1.0;
    }
  });
}

jtk_status jtk_interpolate(const jtk_config* c, const char* smiles_a, const char* smiles_b, int k, const char* out_path,
                           int overwrite) {
  return guard([&] {
    need(c, "config");
    need(smiles_a, "first molecule");
    need(smiles_b, "second molecule");
    need(out_path, "output path");
    jtk::pipe::require_output(out_path, "interpolation output", overwrite != 0);
    const auto path = jtk::pipe::interpolate(c->cfg, smiles_a, smiles_b, k);
    std::vector<std::string> lines;
    for (const auto& d : path) lines.push_back(d.valid ? d.smiles : "?");
    jtk::mol::write_smiles_file(out_path, lines);
  });
}

}  // extern "C"
