#include "soei/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "soei/error.hpp"
#include "soei/gateway.hpp"
#include "soei/http_server.hpp"
#include "soei/judge.hpp"
#include "soei/json_io.hpp"
#include "soei/metrics.hpp"
#include "soei/mock_backends.hpp"
#include "soei/prompting.hpp"
#include "soei/reproduce.hpp"
#include "soei/session_service.hpp"
#include "soei/stats.hpp"

#ifndef SOEI_ASSETS_DEFAULT
#define SOEI_ASSETS_DEFAULT "data"
#endif

namespace soei::cli {

namespace fs = std::filesystem;

fs::path default_assets_dir() { return SOEI_ASSETS_DEFAULT; }

namespace {

struct Globals {
  std::string backend_url;
  std::string judge_url;
  std::string cassette;
  std::string cassette_mode = "replay";
  int parallel = 4;
  std::string out;
  std::string assets = default_assets_dir().string();
  bool mock = false;
};

// Failures of the reproduction itself, as opposed to operational errors.
struct Mismatch {};

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }
  const Globals& globals() const { return g_; }
  fs::path assets() const { return g_.assets; }

  BackendConfig backend_config(BackendRole role) const {
    auto cfg = default_backend_config(role);
    const auto& url = role == BackendRole::Judge ? g_.judge_url : g_.backend_url;
    if (!url.empty()) cfg.base_url = url;
    return cfg;
  }

  std::shared_ptr<ChatBackend> backend(BackendRole role) {
    std::shared_ptr<ChatBackend> inner;
    if (g_.mock) {
      switch (role) {
        case BackendRole::Judge: inner = make_mock_judge(); break;
        case BackendRole::Generator: inner = make_mock_generator(); break;
        case BackendRole::Student: inner = make_mock_student(); break;
      }
    } else {
      inner = std::make_shared<Gateway>(make_http_transport());
    }
    if (g_.cassette.empty()) return inner;
    auto mode = parse_cassette_mode(g_.cassette_mode);
    if (!mode) throw Error(ErrorCode::InvalidArgument, "unknown cassette mode '" + g_.cassette_mode + "'");
    if (!cassette_) cassette_ = std::make_shared<CassetteBackend>(*mode, g_.cassette, inner);
    return cassette_;
  }

  void write_output(const std::string& content) {
    if (g_.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required for this command");
    write_text_file(g_.out, content);
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  std::shared_ptr<CassetteBackend> cassette_;
};

// ---------------------------------------------------------------------------

struct DatasetGenArgs {
  std::string tuples;
  std::string lessons;
  std::string fewshots;
  std::string templates;
};

void cmd_dataset_gen(Context& ctx, const DatasetGenArgs& a) {
  const fs::path lessons = a.lessons.empty() ? ctx.assets() / "lessons" : fs::path(a.lessons);
  const fs::path fewshots = a.fewshots.empty() ? ctx.assets() / "fewshots" : fs::path(a.fewshots);
  const fs::path templates = a.templates.empty() ? ctx.assets() / "templates" : fs::path(a.templates);

  std::vector<TaskTuple> tuples;
  for (const auto& j : read_jsonl_file(a.tuples)) tuples.push_back(validate_task_tuple(j.get<TaskTuple>()));
  const auto tmpl = load_template(templates, "generation");
  auto backend = ctx.backend(BackendRole::Generator);
  const auto cfg = ctx.backend_config(BackendRole::Generator);

  std::string jsonl;
  std::size_t total = 0;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& t = tuples[i];
    const auto lesson = read_text_file(lessons / (t.content_ref + ".txt"));
    std::vector<FewShotExample> shots;
    const auto shot_file = fewshots / (std::string(to_string(t.trait)) + ".jsonl");
    if (fs::exists(shot_file)) shots = load_few_shots(shot_file);
    const auto prompt = render_generation_prompt(tmpl, t, lesson, shots);
    auto reply = backend->chat(cfg, {{ChatRole::User, prompt}});

    ParseContext pctx{t.trait, t.content_ref, assemble_student_system_prompt(t.trait, t.constraints, shots),
                      RecordSource::Generated};
    auto parsed = parse_generated_dialogues(reply.content, pctx);
    for (const auto& d : parsed.skipped) {
      ctx.err() << "warning: tuple " << i + 1 << ": " << d.message << '\n';
    }
    for (const auto& r : parsed.records) jsonl += json(r).dump() + '\n';
    total += parsed.records.size();
    ctx.out() << "tuple " << i + 1 << ": " << parsed.records.size() << " records, " << parsed.skipped.size()
              << " skipped\n";
  }
  ctx.write_output(jsonl);
  ctx.out() << "records: " << total << '\n';
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string dialogues;
  std::string rubric;
  std::string templates;
  int batch_size = 10;
  std::string evaluator = "judge";
};

std::vector<DialoguePair> load_dialogue_pairs(const fs::path& path) {
  std::vector<DialoguePair> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl_file(path)) {
    ++n;
    DialoguePair p;
    p.sample_id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(n);
    if (j.contains("query")) {
      auto r = j.get<DatasetRecord>();
      p.teacher_text = r.query;
      p.student_text = r.response;
    } else {
      p.teacher_text = j.at("teacher").get<std::string>();
      p.student_text = j.at("student").get<std::string>();
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no dialogues in " + path.string());
  return out;
}

void cmd_eval_batch(Context& ctx, const EvalArgs& a) {
  if (a.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "--batch-size must be positive");
  if (ctx.globals().parallel < 1) throw Error(ErrorCode::InvalidArgument, "--parallel must be positive");
  const auto pairs = load_dialogue_pairs(a.dialogues);
  const auto rubric = load_rubric(a.rubric.empty() ? ctx.assets() / "rubric" / "realness_v1.json" : fs::path(a.rubric));
  Judge judge(ctx.backend(BackendRole::Judge), ctx.backend_config(BackendRole::Judge),
              load_judge_prompts(a.templates.empty() ? ctx.assets() / "templates" : fs::path(a.templates)),
              a.evaluator);

  std::vector<std::vector<DialoguePair>> chunks;
  for (std::size_t i = 0; i < pairs.size(); i += a.batch_size) {
    chunks.emplace_back(pairs.begin() + i, pairs.begin() + std::min(pairs.size(), i + a.batch_size));
  }
  std::vector<std::vector<Verdict>> results(chunks.size());
  std::vector<std::exception_ptr> errors(chunks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c; (c = next++) < chunks.size();) {
      try {
        results[c] = judge.judge_realness_batch(chunks[c], rubric, a.batch_size);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(ctx.globals().parallel, chunks.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Verdict> verdicts;
  std::string jsonl;
  for (auto& chunk : results) {
    for (auto& v : chunk) {
      jsonl += json(v).dump() + '\n';
      verdicts.push_back(std::move(v));
    }
  }
  ctx.write_output(jsonl);
  std::size_t valid = 0, compliant = 0;
  for (const auto& v : verdicts) {
    valid += v.valid ? 1 : 0;
    compliant += v.valid && v.compliant ? 1 : 0;
  }
  ctx.out() << "verdicts: " << verdicts.size() << "  valid: " << valid << "  compliant: " << compliant << '\n';
  if (valid > 0) ctx.out() << "recognition_probability: " << fmt3(stats::recognition_probability(verdicts)) << '\n';
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string responses;
  std::string sentiment = "lexicon";
  std::string templates;
};

void cmd_metrics(Context& ctx, const MetricsArgs& a) {
  std::map<std::string, metrics::CohortTexts> by_cohort;
  std::vector<std::string> order;
  for (const auto& j : read_jsonl_file(a.responses)) {
    const auto cohort = j.at("cohort").get<std::string>();
    auto [it, fresh] = by_cohort.try_emplace(cohort, metrics::CohortTexts{cohort, {}});
    if (fresh) order.push_back(cohort);
    it->second.responses.push_back(j.at("text").get<std::string>());
  }
  std::vector<metrics::CohortTexts> cohorts;
  for (const auto& c : order) cohorts.push_back(by_cohort.at(c));

  std::unique_ptr<metrics::SentimentEngine> engine;
  if (a.sentiment == "lexicon") {
    engine = std::make_unique<metrics::LexiconSentiment>();
  } else if (a.sentiment == "judge") {
    auto judge = std::make_shared<Judge>(
        ctx.backend(BackendRole::Judge), ctx.backend_config(BackendRole::Judge),
        load_judge_prompts(a.templates.empty() ? ctx.assets() / "templates" : fs::path(a.templates)));
    engine = std::make_unique<metrics::JudgeSentiment>(judge);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown sentiment engine '" + a.sentiment + "'");
  }
  auto report = metrics::compute_metric_report(cohorts, {}, *engine);
  if (!ctx.globals().out.empty()) ctx.write_output(report_to_json(report).dump(2) + '\n');

  char line[160];
  std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %10s\n", "cohort", "text_token", "ttr", "clarity", "positive");
  ctx.out() << line;
  for (const auto& c : order) {
    const auto& row = report.normalized.at(c);
    std::snprintf(line, sizeof line, "%-8s %10.3f %10.3f %10.3f %10.3f\n", c.c_str(), row.at(metrics::kTextToken),
                  row.at(metrics::kTtr), row.at(metrics::kClarity), row.at(metrics::kPositiveSentiment));
    ctx.out() << line;
  }
}

// ---------------------------------------------------------------------------

json anova_to_json(const stats::AnovaResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"source", row.source}, {"ss", row.ss}, {"df", row.df}, {"ms", row.ms}};
    if (row.f) j["f"] = *row.f;
    if (row.p) j["p"] = *row.p;
    rows.push_back(std::move(j));
  }
  return {{"rows", rows}, {"ss_total", r.ss_total}, {"df_total", r.df_total}};
}

struct StatsArgs {
  std::string input;
  std::string test;
};

void cmd_stats(Context& ctx, const StatsArgs& a) {
  const auto in = read_json_file(a.input);
  json result;
  try {
    if (a.test == "paired-t") {
      auto pre = in.at("pre").get<std::vector<double>>();
      auto post = in.at("post").get<std::vector<double>>();
      auto t = stats::paired_t_test(pre, post);
      result = {{"test", a.test}, {"t", t.t}, {"df", t.df}, {"p", t.p_two_sided}, {"mean_difference", t.mean_difference}};
    } else if (a.test == "anova-one-way") {
      result = anova_to_json(stats::one_way_anova(in.at("groups").get<std::vector<std::vector<double>>>()));
      result["test"] = a.test;
    } else if (a.test == "anova-two-way") {
      result = anova_to_json(stats::two_way_anova(in.at("cells").get<std::vector<std::vector<std::vector<double>>>>(),
                                                  in.value("factor_a", std::string("A")),
                                                  in.value("factor_b", std::string("B"))));
      result["test"] = a.test;
    } else if (a.test == "kappa") {
      auto k = stats::fleiss_kappa(in.at("ratings").get<std::vector<std::vector<std::string>>>(),
                                   in.value("categories", 0));
      result = {{"test", a.test}, {"kappa", k.kappa}, {"p_bar", k.p_bar}, {"p_e", k.p_e}};
    } else if (a.test == "row-means") {
      auto rows = in.at("rows").get<std::map<std::string, std::vector<double>>>();
      json means = json::object();
      for (const auto& [name, values] : rows) means[name] = stats::row_means({values}).at(0);
      result = {{"test", a.test}, {"means", means}};
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown test '" + a.test + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "malformed stats input: " + std::string(e.what()));
  }
  if (!ctx.globals().out.empty()) ctx.write_output(result.dump(2) + '\n');
  ctx.out() << result.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

void cmd_reproduce(Context& ctx, const std::vector<std::string>& targets, const std::string& fixtures) {
  const fs::path dir = fixtures.empty() ? ctx.assets() / "fixtures" / "repro" : fs::path(fixtures);
  std::vector<ReproTarget> todo;
  for (const auto& t : targets) {
    if (t == "all") {
      todo.assign(std::begin(kAllReproTargets), std::end(kAllReproTargets));
      continue;
    }
    auto parsed = parse_repro_target(t);
    if (!parsed) throw Error(ErrorCode::InvalidArgument, "unknown reproduction target '" + t + "'");
    todo.push_back(*parsed);
  }
  bool ok = true;
  json doc = json::array();
  for (auto t : todo) {
    auto report = reproduce(t, dir);
    print_report(ctx.out(), report);
    ok = ok && report.passed();
    json checks = json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"expected", c.expected},
                        {"computed", c.computed},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass}});
    }
    doc.push_back({{"table", std::string(to_string(t))}, {"passed", report.passed()}, {"checks", checks}});
  }
  if (!ctx.globals().out.empty()) ctx.write_output(doc.dump(2) + '\n');
  if (!ok) throw Mismatch{};
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string data_dir = "soei-data";
  std::string bind = "127.0.0.1:8080";
  std::string templates;
  std::string personas;
};

std::map<TraitCode, PersonaConfig> load_personas(const fs::path& path) {
  std::map<TraitCode, PersonaConfig> out;
  auto doc = read_json_file(path);
  for (const auto& [code, entry] : doc.items()) {
    PersonaConfig p;
    if (entry.contains("constraints")) p.constraints = entry.at("constraints").get<LinguisticConstraints>();
    if (entry.contains("few_shots")) p.examples = load_few_shots(path.parent_path() / entry.at("few_shots").get<std::string>());
    out[parse_trait_or_throw(code)] = std::move(p);
  }
  return out;
}

HttpServer* g_server = nullptr;

void cmd_serve(Context& ctx, const ServeArgs& a) {
  ServiceConfig cfg;
  cfg.data_dir = a.data_dir;
  cfg.student_backend = ctx.backend_config(BackendRole::Student);
  cfg.personas = load_personas(a.personas.empty() ? ctx.assets() / "personas.json" : fs::path(a.personas));
  auto judge = std::make_shared<Judge>(
      ctx.backend(BackendRole::Judge), ctx.backend_config(BackendRole::Judge),
      load_judge_prompts(a.templates.empty() ? ctx.assets() / "templates" : fs::path(a.templates)));
  SessionService service(cfg, ctx.backend(BackendRole::Student), judge);
  HttpServer server(service);
  const auto [host, port] = parse_bind_addr(a.bind);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  ctx.err() << "listening on " << host << ":" << port << '\n';
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "cannot listen on " + a.bind);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Student-agent dataset, evaluation and session tools", "soei"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--backend-url", g.backend_url, "Student/generator chat backend base URL")->envname("SOEI_BACKEND_URL");
  app.add_option("--judge-url", g.judge_url, "Judge chat backend base URL")->envname("SOEI_JUDGE_URL");
  app.add_option("--cassette", g.cassette, "Record/replay cassette (JSONL)")->envname("SOEI_CASSETTE");
  app.add_option("--cassette-mode", g.cassette_mode, "record, replay or live")->envname("SOEI_CASSETTE_MODE");
  app.add_option("--parallel", g.parallel, "Concurrent judge batches")->envname("SOEI_PARALLEL");
  app.add_option("--out", g.out, "Output file")->envname("SOEI_OUT");
  app.add_option("--assets", g.assets, "Templates, rubric, few-shots and fixtures")->envname("SOEI_ASSETS_DIR");
  app.add_flag("--mock", g.mock, "Use offline mock models")->envname("SOEI_MOCK");

  DatasetGenArgs gen;
  auto* gen_cmd = app.add_subcommand("dataset-gen", "Generate dialogue records from task tuples");
  gen_cmd->add_option("--tuples", gen.tuples, "Task tuples (JSONL)")->required();
  gen_cmd->add_option("--lessons", gen.lessons, "Directory of <content_ref>.txt lesson plans");
  gen_cmd->add_option("--fewshots", gen.fewshots, "Directory of <TRAIT>.jsonl few-shot examples");
  gen_cmd->add_option("--templates", gen.templates, "Prompt template directory");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval-batch", "Judge dialogue realism in batches");
  eval_cmd->add_option("--dialogues", eval.dialogues, "Dialogues (JSONL)")->required();
  eval_cmd->add_option("--rubric", eval.rubric, "Rubric JSON");
  eval_cmd->add_option("--templates", eval.templates, "Prompt template directory");
  eval_cmd->add_option("--batch-size", eval.batch_size, "Dialogues per judge request");
  eval_cmd->add_option("--evaluator", eval.evaluator, "Evaluator id recorded on verdicts");

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "Per-cohort text metrics");
  met_cmd->add_option("--responses", met.responses, "Responses (JSONL with cohort, text)")->required();
  met_cmd->add_option("--sentiment", met.sentiment, "lexicon or judge");
  met_cmd->add_option("--templates", met.templates, "Prompt template directory");

  StatsArgs st;
  auto* st_cmd = app.add_subcommand("stats", "Statistical tests over a JSON input");
  st_cmd->add_option("--input", st.input, "Input JSON")->required();
  st_cmd->add_option("--test", st.test, "paired-t, anova-one-way, anova-two-way, kappa or row-means")->required();

  std::vector<std::string> targets;
  std::string fixtures;
  auto* rep_cmd = app.add_subcommand("reproduce", "Recompute published tables from fixtures");
  rep_cmd->add_option("targets", targets, "Table5, TableA4, Table3, Table6, Table1 or all")->required();
  rep_cmd->add_option("--fixtures", fixtures, "Fixture directory");

  ServeArgs srv;
  auto* srv_cmd = app.add_subcommand("serve", "Run the session HTTP service");
  srv_cmd->add_option("--data-dir", srv.data_dir, "Event log directory")->envname("SOEI_DATA_DIR");
  srv_cmd->add_option("--bind", srv.bind, "host:port")->envname("SOEI_BIND_ADDR");
  srv_cmd->add_option("--templates", srv.templates, "Prompt template directory");
  srv_cmd->add_option("--personas", srv.personas, "Persona configuration JSON");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kOperationalError;
  }

  Context ctx(g, out, err);
  try {
    if (*gen_cmd) cmd_dataset_gen(ctx, gen);
    else if (*eval_cmd) cmd_eval_batch(ctx, eval);
    else if (*met_cmd) cmd_metrics(ctx, met);
    else if (*st_cmd) cmd_stats(ctx, st);
    else if (*rep_cmd) cmd_reproduce(ctx, targets, fixtures);
    else if (*srv_cmd) cmd_serve(ctx, srv);
  } catch (const Mismatch&) {
    return kReproductionMismatch;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kOperationalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOperationalError;
  }
  return kOk;
}

}  // namespace soei::cli
