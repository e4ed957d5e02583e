// Copyright 2026 The nplm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// nplm: command-line front end for corpus builds, model training, datastore
// builds, perplexity evaluation, scaling sweeps, opt-out runs, attribution
// listings and throughput benchmarks.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nplm.hpp"

namespace fs = std::filesystem;
using namespace nplm;

namespace {

// Relative paths are taken from NPLM_DATA_ROOT when it is set.
std::string resolve(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  if (const char* root = std::getenv("NPLM_DATA_ROOT"); root && *root) return (fs::path(root) / path).string();
  return path;
}

void require_exists(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<Document> read_documents(const std::vector<std::string>& paths) {
  std::vector<Document> docs;
  for (const auto& p : paths) {
    require_exists(p, "input");
    auto part = read_jsonl(p);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return docs;
}

void write_report(const CsvTable& t, const std::string& out) {
  if (out.empty() || out == "-") {
    write_csv(std::cout, t);
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  write_csv(f, t);
}

// Options shared by every subcommand that reads a run config.
struct ConfigFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_length, stride;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--seed", seed, "run seed (overrides the config)");
    app->add_option("--max-length", max_length, "evaluation window length");
    app->add_option("--stride", stride, "evaluation window stride");
  }

  RunConfig load() const {
    RunConfig c;
    if (!config.empty()) {
      const auto path = resolve(config);
      require_exists(path, "config");
      c = load_run_config(path);
    }
    if (seed) c.seed = *seed;
    if (max_length) c.eval.max_length = *max_length;
    if (stride) c.eval.stride = *stride;
    c.eval.validate();
    return c;
  }
};

struct StoreFlags {
  std::optional<std::string> index;
  std::optional<std::size_t> nlist, m, bits, index_probe, block_length, block_stride, exact_threshold, rerank;
  std::optional<bool> keep_originals;

  void add(CLI::App* app) {
    app->add_option("--index", index, "auto, flat or ivfpq");
    app->add_option("--nlist", nlist, "IVF-PQ coarse centroids");
    app->add_option("--pq-m", m, "IVF-PQ sub-quantizers");
    app->add_option("--pq-bits", bits, "bits per sub-quantizer code");
    app->add_option("--index-probe", index_probe, "default lists scanned per query");
    app->add_flag("--keep-originals,!--no-keep-originals", keep_originals, "store full vectors for exact re-ranking");
    app->add_option("--rerank", rerank, "re-rank k * rerank approximate candidates exactly");
    app->add_option("--exact-threshold", exact_threshold, "largest store that auto builds exactly");
    app->add_option("--block-length", block_length, "RIC block length");
    app->add_option("--block-stride", block_stride, "RIC block stride");
  }

  void apply(RunConfig& c) const {
    if (index) c.store.index.kind = parse_index_kind(*index);
    if (nlist) c.store.index.ivfpq.nlist = *nlist;
    if (m) c.store.index.ivfpq.m = *m;
    if (bits) c.store.index.ivfpq.bits = *bits;
    if (index_probe) c.store.index.ivfpq.probe = *index_probe;
    if (exact_threshold) c.store.index.exact_threshold = *exact_threshold;
    if (keep_originals) c.store.index.ivfpq.keep_originals = *keep_originals;
    if (rerank) c.store.index.ivfpq.rerank = *rerank;
    if (block_length) c.store.blocks.length = *block_length;
    if (block_stride) c.store.blocks.stride = *block_stride;
    c.store.index.ivfpq.seed = c.seed;
  }
};

struct ScorerFlags {
  std::optional<double> lambda, tau;
  std::optional<std::size_t> k, probe, ric_k;
  std::optional<std::string> variant;

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "kNN-LM weight on the parametric term");
    app->add_option("--k", k, "kNN-LM neighbors");
    app->add_option("--tau", tau, "kNN-LM softmax temperature");
    app->add_option("--probe", probe, "IVF-PQ lists scanned per query");
    app->add_option("--variant", variant, "RIC-LM variant: basic, ensemble, concat, concat_next");
    app->add_option("--ric-k", ric_k, "blocks for the ensemble and concat variants");
  }

  void apply(RunConfig& c) const {
    auto set = [&](KnnConfig& kc) {
      if (lambda) kc.lambda = *lambda;
      if (k) kc.k = *k;
      if (tau) kc.temperature = *tau;
      if (probe) kc.probe = *probe;
    };
    set(c.knn);
    for (auto& [_, kc] : c.knn_by_domain) set(kc);
    if (variant) c.ric.variant = parse_ric_variant(*variant);
    if (ric_k) c.ric.k = *ric_k;
    c.knn.validate();
  }
};

KneserNeyCacheLM load_model(const std::string& path) {
  const auto p = resolve(path);
  require_exists(p, "model");
  return KneserNeyCacheLM::load(p);
}

Datastore load_store(const std::string& path) {
  const auto p = resolve(path);
  require_exists(p, "store");
  return Datastore::load(p);
}

void check_compatible(const KneserNeyCacheLM& model, const Datastore& store) {
  if (model.vocabulary().fingerprint() != store.vocabulary().fingerprint())
    throw InvalidArgument("vocabulary mismatch between model and store");
}

// "parametric", "knn" or "ric" / "ric_<variant>".
std::unique_ptr<WindowScorer> make_scorer(const std::string& method, const KneserNeyCacheLM& model,
                                          const Datastore* store, const RunConfig& cfg, const std::string& domain,
                                          const std::optional<StoreSnapshot>& snap = std::nullopt) {
  if (method == "parametric") return make_parametric_scorer(model);
  if (!store) throw InvalidArgument("method " + method + " needs --store");
  if (method == "knn") return make_knn_scorer(model, *store, cfg.knn_for(domain), snap);
  if (method.rfind("ric", 0) == 0) {
    RicConfig r = cfg.ric;
    if (method.size() > 3) {
      if (method[3] != '_') throw InvalidArgument("unknown method " + method);
      r.variant = parse_ric_variant(method.substr(4));
    }
    r.block_length = store->config().blocks.length;
    r.stride = store->config().blocks.stride;
    return make_ric_scorer(model, *store, r, snap);
  }
  throw InvalidArgument("unknown method " + method);
}

// Domain label for one evaluation file: the shared document domain, or the
// file stem when documents disagree.
std::string domain_label(const std::vector<Document>& docs, const std::string& path) {
  std::set<std::string> domains;
  for (const auto& d : docs) domains.insert(d.domain);
  return domains.size() == 1 ? *domains.begin() : fs::path(path).stem().string();
}

std::uint64_t store_tokens(const Datastore* store) { return store ? store->stats().tokens : 0; }

// ---------------------------------------------------------------------------

int cmd_build_corpus(const std::vector<std::string>& inputs, const std::string& out, const std::string& licenses,
                     const DedupOptions& dedup_opts, bool no_dedup, bool upsample, const std::string& stats_out) {
  std::vector<std::string> paths;
  for (const auto& p : inputs) paths.push_back(resolve(p));
  auto docs = read_documents(paths);

  std::set<LicenseClass> allowed;
  for (const auto& name : split_list(licenses)) {
    const auto c = parse_license_class(name);
    if (!c) throw InvalidArgument("unknown license class " + name);
    allowed.insert(*c);
  }
  if (allowed.empty()) throw InvalidArgument("empty license filter");
  std::vector<Document> kept;
  for (auto& d : docs)
    if (allowed.contains(d.license_class)) kept.push_back(std::move(d));
  if (kept.empty()) throw InvalidArgument("no documents left after license filter {" + licenses + "}");

  // Deduplicate within each domain, keeping input order.
  std::size_t dropped = 0;
  if (!no_dedup) {
    std::map<std::string, std::vector<Document>> by_domain;
    std::vector<std::string> order;
    for (auto& d : kept) {
      if (!by_domain.contains(d.domain)) order.push_back(d.domain);
      by_domain[d.domain].push_back(std::move(d));
    }
    std::set<std::string> keep_ids;
    for (const auto& dom : order) {
      auto r = dedup(by_domain[dom], dedup_opts);
      dropped += r.dropped_ids.size();
      for (const auto& d : r.kept) keep_ids.insert(d.id);
    }
    std::vector<Document> flat;
    for (const auto& dom : order)
      for (auto& d : by_domain[dom])
        if (keep_ids.contains(d.id)) flat.push_back(std::move(d));
    kept = std::move(flat);
  }

  auto manifest = CorpusManifest::from_documents(kept);
  UpsamplePlan plan;
  for (const auto& [dom, _] : manifest.token_counts_by_domain) plan.repetition_factor[dom] = 1;
  if (upsample) plan = upsample_plan(manifest);
  std::vector<Document> final_docs;
  for (const auto& d : manifest.documents) {
    final_docs.push_back(d);
    for (std::uint32_t r = 2; r <= plan.repetition_factor.at(d.domain); ++r) {
      Document copy = d;
      copy.id += "~" + std::to_string(r);
      final_docs.push_back(std::move(copy));
    }
  }
  write_jsonl(resolve(out), final_docs);

  CsvTable t;
  t.meta.emplace_back("licenses", licenses);
  t.meta.emplace_back("dropped_duplicates", std::to_string(dropped));
  t.header = {"domain", "documents", "tokens", "share_percent", "upsample_factor"};
  std::map<std::string, std::uint64_t> doc_counts;
  for (const auto& d : manifest.documents) ++doc_counts[d.domain];
  const double total = static_cast<double>(manifest.total_tokens());
  char share[32];
  for (const auto& [dom, tokens] : manifest.token_counts_by_domain) {
    std::snprintf(share, sizeof share, "%.2f", 100.0 * static_cast<double>(tokens) / total);
    t.rows.push_back({dom, std::to_string(doc_counts[dom]), std::to_string(tokens), share,
                      std::to_string(plan.repetition_factor.at(dom))});
  }
  write_report(t, stats_out.empty() ? "-" : resolve(stats_out));
  return 0;
}

int cmd_train_lm(const std::vector<std::string>& corpus, const std::string& out, const RunConfig& cfg) {
  std::vector<std::string> paths;
  for (const auto& p : corpus) paths.push_back(resolve(p));
  const auto docs = read_documents(paths);
  if (docs.empty()) throw InvalidArgument("training corpus is empty");
  Vocabulary vocab;
  std::vector<TokenId> stream;
  for (const auto& d : docs) {
    stream.push_back(kBeginOfText);
    for (const auto& t : tokenize(d.text)) stream.push_back(vocab.add(t));
  }
  const auto model = KneserNeyCacheLM::train(stream, std::move(vocab), cfg.lm);
  model.save(resolve(out));
  nlohmann::json j = {{"model", resolve(out)},
                      {"vocabulary", model.vocab_size()},
                      {"training_tokens", stream.size()},
                      {"order", model.order()}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_build_store(const std::vector<std::string>& corpus, const std::string& model_path, const std::string& out,
                    const RunConfig& cfg) {
  std::vector<std::string> paths;
  for (const auto& p : corpus) paths.push_back(resolve(p));
  const auto docs = read_documents(paths);
  const auto model = load_model(model_path);
  const auto store = Datastore::build(docs, model.vocabulary(), cfg.store);
  store.save(resolve(out));
  const auto st = store.stats();
  nlohmann::json j = {{"store", resolve(out)},
                      {"documents", st.documents},
                      {"tokens", st.tokens},
                      {"blocks", st.blocks},
                      {"index", !store.has_token_store() ? "none" : store.index().type() == IndexType::kFlat ? "flat" : "ivfpq"}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& store_path, const std::vector<std::string>& texts,
             const std::vector<std::string>& methods, const RunConfig& cfg, bool timing, const std::string& out) {
  const auto model = load_model(model_path);
  std::optional<Datastore> store;
  if (!store_path.empty()) {
    store.emplace(load_store(store_path));
    check_compatible(model, *store);
  }
  // Pin one store version for the whole run.
  std::optional<StoreSnapshot> snap;
  if (store) snap = store->snapshot();

  std::vector<EvalRow> rows;
  std::size_t skipped = 0;
  for (const auto& text : texts) {
    const auto path = resolve(text);
    require_exists(path, "evaluation text");
    const auto docs = read_jsonl(path);
    const auto domain = domain_label(docs, path);
    const auto stream = make_eval_stream(docs, model.vocabulary(), cfg.max_pii_share);
    skipped += stream.skipped_documents;
    if (stream.skipped_documents)
      std::cerr << nlohmann::json{{"warning", "skipped documents over the PII limit"},
                                  {"file", path},
                                  {"skipped", stream.skipped_documents}}
                       .dump()
                << '\n';
    for (const auto& method : methods) {
      auto scorer = make_scorer(method, model, store ? &*store : nullptr, cfg, domain, snap);
      const auto res = perplexity_with_retrieval(stream, *scorer, cfg.eval);
      rows.push_back({domain, scorer->method(), method == "parametric" ? 0 : store_tokens(store ? &*store : nullptr),
                      res.perplexity, timing ? std::optional<double>(res.tokens_per_second()) : std::nullopt});
    }
  }
  auto t = eval_table(cfg.seed, rows);
  t.meta.emplace_back("skipped_documents", std::to_string(skipped));
  if (snap) t.meta.emplace_back("store_version", std::to_string(snap->version));
  write_report(t, out.empty() ? "-" : resolve(out));
  return 0;
}

int cmd_sweep(const std::vector<std::string>& corpus, const std::string& model_path, const std::string& text,
              const std::vector<double>& fractions, const std::vector<std::string>& methods, const RunConfig& cfg,
              const std::string& out) {
  if (fractions.empty()) throw InvalidArgument("sweep needs at least one fraction");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw InvalidArgument("sweep fractions must lie in (0, 1]");
    if (i && !(fractions[i] > fractions[i - 1])) throw InvalidArgument("sweep fractions must be strictly increasing");
  }
  std::vector<std::string> paths;
  for (const auto& p : corpus) paths.push_back(resolve(p));
  auto docs = read_documents(paths);
  if (docs.empty()) throw InvalidArgument("sweep corpus is empty");
  const auto model = load_model(model_path);
  const auto text_path = resolve(text);
  require_exists(text_path, "evaluation text");
  const auto eval_docs = read_jsonl(text_path);
  const auto domain = domain_label(eval_docs, text_path);
  const auto stream = make_eval_stream(eval_docs, model.vocabulary(), cfg.max_pii_share);

  // One fixed permutation; each fraction takes a prefix, so stores nest.
  Rng rng(cfg.seed);
  rng.shuffle(std::span<Document>(docs));
  // Quantizers are trained once on the full store and reused for every fraction.
  std::optional<Datastore> full;
  const bool needs_training = cfg.store.index.kind == IndexKind::kIvfPq ||
                              (cfg.store.index.kind == IndexKind::kAuto && [&] {
                                std::size_t n = 0;
                                for (const auto& d : docs) n += tokenize(d.text).size();
                                return n > cfg.store.index.exact_threshold;
                              }());
  if (needs_training) {
    StoreConfig sc = cfg.store;
    sc.index.kind = IndexKind::kIvfPq;
    sc.block_store = false;
    full.emplace(Datastore::build(docs, model.vocabulary(), sc));
  }

  std::vector<SweepRow> rows;
  for (double f : fractions) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f * static_cast<double>(docs.size()))));
    const std::span<const Document> subset(docs.data(), std::min(n, docs.size()));
    StoreConfig sc = cfg.store;
    if (needs_training) sc.index.kind = IndexKind::kIvfPq;
    const auto store = Datastore::build(subset, model.vocabulary(), sc, full ? &full->index() : nullptr);
    for (const auto& method : methods) {
      auto scorer = make_scorer(method, model, &store, cfg, domain);
      const auto res = perplexity_with_retrieval(stream, *scorer, cfg.eval);
      rows.push_back({f, scorer->method(), method == "parametric" ? 0 : store.stats().tokens, res.perplexity});
    }
  }
  write_report(sweep_table(cfg.seed, rows), out.empty() ? "-" : resolve(out));
  return 0;
}

int cmd_opt_out(const std::string& store_path, const std::string& model_path, const std::string& text,
                const OptOutSelector& selector, const std::string& method, const RunConfig& cfg,
                const std::string& save_to, const std::string& out) {
  auto store = load_store(store_path);
  const auto model = load_model(model_path);
  check_compatible(model, store);
  const auto text_path = resolve(text);
  require_exists(text_path, "evaluation text");
  const auto eval_docs = read_jsonl(text_path);
  const auto domain = domain_label(eval_docs, text_path);
  const auto stream = make_eval_stream(eval_docs, model.vocabulary(), cfg.max_pii_share);

  auto run = [&](const std::string& m) {
    auto scorer = make_scorer(m, model, &store, cfg, domain, store.snapshot());
    return perplexity_with_retrieval(stream, *scorer, cfg.eval).perplexity;
  };
  const double before = run(method);
  const auto result = store.opt_out(selector);
  if (result.documents_removed == 0)
    std::cerr << nlohmann::json{{"warning", "opt-out selector matched no live documents"}}.dump() << '\n';
  if (result.unknown_ids)
    std::cerr << nlohmann::json{{"warning", "unknown document ids"}, {"count", result.unknown_ids}}.dump() << '\n';
  const double after = run(method);
  const double parametric = run("parametric");
  if (!save_to.empty()) store.save(resolve(save_to));

  auto t = opt_out_table(cfg.seed, {{make_scorer(method, model, &store, cfg, domain)->method(),
                                     result.documents_removed, before, after, parametric}});
  t.meta.emplace_back("store_version", std::to_string(result.version));
  write_report(t, out.empty() ? "-" : resolve(out));
  return 0;
}

int cmd_attribute(const std::string& store_path, const std::string& model_path, const std::string& prompt,
                  const std::string& method, std::size_t top_n, const RunConfig& cfg) {
  if (prompt.empty()) throw InvalidArgument("prompt must not be empty");
  const auto store = load_store(store_path);
  const auto model = load_model(model_path);
  check_compatible(model, store);
  std::vector<TokenId> ctx = {kBeginOfText};
  for (const auto& t : tokenize(prompt)) ctx.push_back(model.vocabulary().lookup(t));

  ScoredPrediction pred;
  if (method == "knn") {
    pred = knn_lm_next(ctx, model, store, cfg.knn);
  } else if (method.rfind("ric", 0) == 0) {
    RicConfig r = cfg.ric;
    if (method.size() > 4) r.variant = parse_ric_variant(method.substr(4));
    r.block_length = store.config().blocks.length;
    r.stride = store.config().blocks.stride;
    pred = ric_next(ctx, model, store, r);
  } else {
    throw InvalidArgument("attribute supports knn and ric methods, not " + method);
  }

  std::cout << "prompt: " << prompt << "\n\npredicted next tokens:\n";
  char buf[64];
  for (const auto& [id, p] : pred.distribution.top(top_n)) {
    std::snprintf(buf, sizeof buf, "%.6f", p);
    std::cout << "  " << buf << "  " << model.vocabulary().token(id) << '\n';
  }
  std::cout << "\nretrieved (store version " << pred.attribution.store_version << "):\n";
  if (pred.attribution.items.empty()) std::cout << "  (nothing retrieved)\n";
  std::cout << "  rank  weight    document  offset  text\n";
  std::size_t rank = 0;
  for (const auto& item : pred.attribution.items) {
    if (rank == top_n) break;
    std::snprintf(buf, sizeof buf, "%4zu  %.6f", ++rank, item.weight);
    std::cout << "  " << buf << "  " << item.provenance.document_id << "  " << item.provenance.offset << "  "
              << item.text << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.6f", pred.attribution.total_weight());
  std::cout << "  total weight " << buf << '\n';
  return 0;
}

int cmd_bench(const std::vector<std::string>& corpus, const std::string& model_path, const std::string& text,
              const std::vector<std::size_t>& sizes, const std::vector<std::string>& probes, std::size_t min_tokens,
              const RunConfig& cfg, const std::string& out) {
  std::vector<std::string> paths;
  for (const auto& p : corpus) paths.push_back(resolve(p));
  const auto docs = read_documents(paths);
  const auto model = load_model(model_path);
  const auto text_path = resolve(text);
  require_exists(text_path, "evaluation text");
  const auto eval_docs = read_jsonl(text_path);
  const auto domain = domain_label(eval_docs, text_path);
  auto stream = make_eval_stream(eval_docs, model.vocabulary(), cfg.max_pii_share);
  // Repeat the text until enough tokens are scored for a stable rate.
  const auto one = stream;
  while (stream.scored_count() < min_tokens) {
    stream.tokens.insert(stream.tokens.end(), one.tokens.begin(), one.tokens.end());
    stream.scored.insert(stream.scored.end(), one.scored.begin(), one.scored.end());
  }

  std::vector<BenchRow> rows;
  auto timed = [&](WindowScorer& s) { return perplexity_with_retrieval(stream, s, cfg.eval); };
  for (const auto size : sizes) {
    std::vector<Document> subset;
    std::size_t tokens = 0;
    for (const auto& d : docs) {
      if (tokens >= size) break;
      tokens += tokenize(d.text).size();
      subset.push_back(d);
    }
    // Index build time is excluded from the rates.
    const auto store = Datastore::build(subset, model.vocabulary(), cfg.store);
    const auto n = store.stats().tokens;
    {
      auto s = make_parametric_scorer(model);
      const auto r = timed(*s);
      rows.push_back({"parametric", n, 0, r.tokens_per_second(), r.perplexity});
    }
    {
      auto s = make_scorer("ric_basic", model, &store, cfg, domain);
      const auto r = timed(*s);
      rows.push_back({s->method(), n, 0, r.tokens_per_second(), r.perplexity});
    }
    const auto* ivf = dynamic_cast<const IvfPqIndex*>(&store.index());
    std::vector<std::size_t> probe_values;
    if (!ivf) {
      probe_values = {0};
    } else {
      for (const auto& p : probes) probe_values.push_back(p == "max" ? ivf->config().nlist : std::stoul(p));
    }
    for (const auto probe : probe_values) {
      RunConfig c = cfg;
      c.knn.probe = probe;
      c.knn_by_domain.clear();
      auto s = make_scorer("knn", model, &store, c, domain);
      const auto r = timed(*s);
      rows.push_back({ivf ? "knn_ivfpq" : "knn_flat", n, probe, r.tokens_per_second(), r.perplexity});
    }
  }
  write_report(bench_table(cfg.seed, rows), out.empty() ? "-" : resolve(out));
  return 0;
}

int cmd_synth(const std::string& out, std::size_t tokens, std::size_t doc_tokens, const std::vector<std::string>& domains,
              const std::string& license, std::uint64_t seed) {
  synth::PhraseModelOptions o;
  o.seed = seed;
  const synth::PhraseModel pm(o);
  Rng rng(seed ^ 0x5eed);
  std::vector<Document> docs;
  const auto per_domain = tokens / std::max<std::size_t>(domains.size(), 1);
  for (const auto& dom : domains) {
    auto part = pm.documents(per_domain, doc_tokens, rng, dom + "-", dom, license);
    docs.insert(docs.end(), part.begin(), part.end());
  }
  write_jsonl(resolve(out), docs);
  std::cout << nlohmann::json{{"documents", docs.size()}, {"out", resolve(out)}}.dump() << '\n';
  return 0;
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const VersionConflict*>(&e)) return "version_conflict";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const FormatError*>(&e)) return "format_error";
  if (dynamic_cast<const IoError*>(&e)) return "io_error";
  if (dynamic_cast<const StateError*>(&e)) return "state_error";
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric language modeling toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nplm 0.1.0");

  ConfigFlags cf;
  StoreFlags sf;
  ScorerFlags scf;

  // build-corpus
  std::vector<std::string> bc_inputs;
  std::string bc_out, bc_licenses = "PD,SW,BY", bc_stats;
  DedupOptions bc_dedup;
  bool bc_no_dedup = false, bc_upsample = false;
  auto* bc = app.add_subcommand("build-corpus", "filter by license, deduplicate and upsample a JSONL corpus");
  bc->add_option("--input", bc_inputs, "input JSONL files")->required();
  bc->add_option("--out", bc_out, "output JSONL")->required();
  bc->add_option("--licenses", bc_licenses, "comma-separated license classes to keep (PD, SW, BY, other)")
      ->capture_default_str();
  bc->add_option("--dedup-n", bc_dedup.n, "n-gram length for deduplication")->capture_default_str();
  bc->add_option("--dedup-threshold", bc_dedup.threshold, "duplicate n-gram share that drops a document")
      ->capture_default_str();
  bc->add_flag("--no-dedup", bc_no_dedup, "skip deduplication");
  bc->add_flag("--upsample", bc_upsample, "repeat domains under 5% of tokens three times");
  bc->add_option("--stats", bc_stats, "write the domain table here instead of stdout");

  // train-lm
  std::vector<std::string> tl_corpus;
  std::string tl_out;
  std::optional<std::size_t> tl_order, tl_window;
  std::optional<double> tl_cache, tl_discount;
  auto* tl = app.add_subcommand("train-lm", "train the Kneser-Ney cache model");
  tl->add_option("--corpus", tl_corpus, "training JSONL files")->required();
  tl->add_option("--out", tl_out, "model file")->required();
  tl->add_option("--order", tl_order, "n-gram order");
  tl->add_option("--discount", tl_discount, "absolute discount");
  tl->add_option("--cache-weight", tl_cache, "weight of the cache unigram");
  tl->add_option("--cache-window", tl_window, "tokens the cache looks back");
  cf.add(tl);

  // build-store
  std::vector<std::string> bs_corpus;
  std::string bs_model, bs_out;
  bool bs_no_tokens = false, bs_no_blocks = false;
  auto* bs = app.add_subcommand("build-store", "build a token and block datastore");
  bs->add_option("--corpus", bs_corpus, "datastore JSONL files")->required();
  bs->add_option("--model", bs_model, "model whose vocabulary keys the store")->required();
  bs->add_option("--out", bs_out, "store directory")->required();
  bs->add_flag("--no-token-store", bs_no_tokens, "skip the kNN token entries");
  bs->add_flag("--no-block-store", bs_no_blocks, "skip the RIC blocks");
  cf.add(bs);
  sf.add(bs);

  // eval
  std::string ev_model, ev_store, ev_out;
  std::vector<std::string> ev_texts, ev_methods = {"parametric"};
  bool ev_timing = false;
  auto* ev = app.add_subcommand("eval", "sliding-window perplexity");
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--store", ev_store, "store directory");
  ev->add_option("--text", ev_texts, "evaluation JSONL files")->required();
  ev->add_option("--method", ev_methods, "parametric, knn, ric or ric_<variant>; repeatable")->capture_default_str();
  ev->add_flag("--timing", ev_timing, "fill the tokens_per_second column");
  ev->add_option("--out", ev_out, "CSV report (stdout when omitted)");
  cf.add(ev);
  scf.add(ev);

  // sweep
  std::vector<std::string> sw_corpus, sw_methods = {"parametric", "knn", "ric_basic"};
  std::string sw_model, sw_text, sw_out;
  std::vector<double> sw_fractions = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
  auto* sw = app.add_subcommand("sweep", "evaluate over nested datastore fractions");
  sw->add_option("--corpus", sw_corpus, "datastore JSONL files")->required();
  sw->add_option("--model", sw_model, "model file")->required();
  sw->add_option("--text", sw_text, "evaluation JSONL")->required();
  sw->add_option("--fractions", sw_fractions, "strictly increasing fractions in (0, 1]")->delimiter(',');
  sw->add_option("--method", sw_methods, "methods to evaluate; repeatable")->delimiter(',');
  sw->add_option("--out", sw_out, "CSV report (stdout when omitted)");
  cf.add(sw);
  sf.add(sw);
  scf.add(sw);

  // opt-out
  std::string oo_store, oo_model, oo_text, oo_method = "knn", oo_save, oo_out;
  std::vector<std::string> oo_ids;
  std::optional<std::string> oo_domain, oo_license;
  auto* oo = app.add_subcommand("opt-out", "remove documents and compare perplexity before and after");
  oo->add_option("--store", oo_store, "store directory")->required();
  oo->add_option("--model", oo_model, "model file")->required();
  oo->add_option("--text", oo_text, "evaluation JSONL")->required();
  oo->add_option("--doc-id", oo_ids, "document id to remove; repeatable");
  oo->add_option("--domain", oo_domain, "remove every document of this domain");
  oo->add_option("--license-class", oo_license, "remove every document of this license class");
  oo->add_option("--method", oo_method, "knn or ric_<variant>")->capture_default_str();
  oo->add_option("--save", oo_save, "write the updated store here");
  oo->add_option("--out", oo_out, "CSV report (stdout when omitted)");
  cf.add(oo);
  scf.add(oo);

  // attribute
  std::string at_store, at_model, at_prompt, at_method = "knn";
  std::size_t at_top = 5;
  auto* at = app.add_subcommand("attribute", "show a prediction with the stored data behind it");
  at->add_option("--store", at_store, "store directory")->required();
  at->add_option("--model", at_model, "model file")->required();
  at->add_option("--prompt", at_prompt, "prompt text")->required();
  at->add_option("--method", at_method, "knn or ric_<variant>")->capture_default_str();
  at->add_option("--top-n", at_top, "rows to show")->capture_default_str();
  cf.add(at);
  scf.add(at);

  // bench
  std::vector<std::string> bn_corpus, bn_probes = {"1", "8", "max"};
  std::string bn_model, bn_text, bn_out;
  std::vector<std::size_t> bn_sizes = {100000};
  std::size_t bn_min = 10000;
  auto* bn = app.add_subcommand("bench", "tokens per second by method, store size and probe");
  bn->add_option("--corpus", bn_corpus, "datastore JSONL files")->required();
  bn->add_option("--model", bn_model, "model file")->required();
  bn->add_option("--text", bn_text, "evaluation JSONL")->required();
  bn->add_option("--sizes", bn_sizes, "store sizes in tokens")->delimiter(',');
  bn->add_option("--probes", bn_probes, "IVF-PQ probe values; 'max' scans every list")->delimiter(',');
  bn->add_option("--min-tokens", bn_min, "scored tokens per measurement")->capture_default_str();
  bn->add_option("--out", bn_out, "CSV report (stdout when omitted)");
  cf.add(bn);
  sf.add(bn);
  scf.add(bn);

  // synth
  std::string sy_out, sy_license = "CC0";
  std::size_t sy_tokens = 100000, sy_doc = 300;
  std::vector<std::string> sy_domains = {"synthetic"};
  std::uint64_t sy_seed = 0;
  auto* sy = app.add_subcommand("synth", "write a synthetic phrase-model corpus");
  sy->add_option("--out", sy_out, "output JSONL")->required();
  sy->add_option("--tokens", sy_tokens, "total tokens")->capture_default_str();
  sy->add_option("--doc-tokens", sy_doc, "tokens per document")->capture_default_str();
  sy->add_option("--domains", sy_domains, "domain names")->delimiter(',');
  sy->add_option("--license", sy_license, "license tag")->capture_default_str();
  sy->add_option("--seed", sy_seed, "generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (*bc) return cmd_build_corpus(bc_inputs, bc_out, bc_licenses, bc_dedup, bc_no_dedup, bc_upsample, bc_stats);
    if (*sy) return cmd_synth(sy_out, sy_tokens, sy_doc, sy_domains, sy_license, sy_seed);

    auto cfg = cf.load();
    sf.apply(cfg);
    scf.apply(cfg);
    if (*tl) {
      if (tl_order) cfg.lm.order = *tl_order;
      if (tl_discount) cfg.lm.discount = *tl_discount;
      if (tl_cache) cfg.lm.cache_weight = *tl_cache;
      if (tl_window) cfg.lm.cache_window = *tl_window;
      return cmd_train_lm(tl_corpus, tl_out, cfg);
    }
    if (*bs) {
      cfg.store.token_store = !bs_no_tokens;
      cfg.store.block_store = !bs_no_blocks;
      return cmd_build_store(bs_corpus, bs_model, bs_out, cfg);
    }
    if (*ev) return cmd_eval(ev_model, ev_store, ev_texts, ev_methods, cfg, ev_timing, ev_out);
    if (*sw) return cmd_sweep(sw_corpus, sw_model, sw_text, sw_fractions, sw_methods, cfg, sw_out);
    if (*oo) {
      OptOutSelector sel;
      sel.document_ids = oo_ids;
      sel.domain = oo_domain;
      if (oo_license) {
        sel.license_class = parse_license_class(*oo_license);
        if (!sel.license_class) throw InvalidArgument("unknown license class " + *oo_license);
      }
      if (sel.document_ids.empty() && !sel.domain && !sel.license_class)
        throw InvalidArgument("opt-out needs --doc-id, --domain or --license-class");
      return cmd_opt_out(oo_store, oo_model, oo_text, sel, oo_method, cfg, oo_save, oo_out);
    }
    if (*at) return cmd_attribute(at_store, at_model, at_prompt, at_method, at_top, cfg);
    if (*bn) return cmd_bench(bn_corpus, bn_model, bn_text, bn_sizes, bn_probes, bn_min, cfg, bn_out);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
