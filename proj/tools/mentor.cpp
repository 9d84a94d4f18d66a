// mentor: command-line entry point.
//
//   mentor sandbox serve --bind 127.0.0.1:8080 [--corpus docs.jsonl]
//   mentor teacher gen   --client toy|<url> --questions q.jsonl --out teacher.jsonl [--sandbox <url>]
//   mentor rewards score --references teacher.jsonl --rollouts student.jsonl --out scored.jsonl
//   mentor train toy     --report report.jsonl [--references teacher.jsonl] [--sandbox <url>]
//   mentor eval em       --input predictions.jsonl [--out em.json]
//   mentor analyze       --references teacher.jsonl --rollouts student.jsonl --out metrics.json
//
// Every subcommand takes --config <file> and repeated --set section.key=value.
// Logs go to stderr as JSON lines; failures end with one
// {"error": <code>, "message": ...} line.
// Exit codes: 0 ok, 1 runtime failure, 2 usage or config error, 3 invariant violation.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mentor/mentor.hpp"

namespace {

using namespace mentor;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void log_event(const Json& j) { std::cerr << j.dump() << '\n'; }

void warn(const std::string& m) { log_event(Json{{"warning", m}}); }

int exit_code_for(const std::string& code) {
  if (code == "config_error") return 2;
  if (code == "invariant_violation") return 3;
  return 1;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << Json{{"error", code}, {"message", message}}.dump() << '\n';
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::vector<std::string> flags;  // filled from subcommand-specific options

  void set(const std::string& key, const Json& value) { flags.push_back(key + "=" + value.dump()); }

  void add_to(CLI::App* app) {
    app->add_option("--config", path, "JSON configuration file");
    app->add_option("--set", sets, "Override a config value: section.key=value")->type_name("KEY=VALUE");
  }

  RunConfig resolve(const std::string& command) const {
    std::vector<std::string> all = sets;
    all.insert(all.end(), flags.begin(), flags.end());
    RunConfig cfg = validate_config(path, all);
    log_event(Json{{"command", command}, {"seed", cfg.grpo.seed}, {"config", config_to_json(cfg)}});
    return cfg;
  }
};

std::unique_ptr<ToolExecutor> make_executor(const RunConfig& cfg) {
  std::chrono::milliseconds deadline(cfg.sandbox.call_deadline_ms);
  if (!cfg.sandbox.url.empty()) return std::make_unique<RemoteSandbox>(cfg.sandbox.url, deadline);
  std::shared_ptr<const SearchBackend> backend;
  if (!cfg.sandbox.corpus.empty()) backend = LexicalIndex::load(cfg.sandbox.corpus);
  SandboxOptions opts;
  opts.call_deadline = deadline;
  return std::make_unique<Sandbox>(backend, opts);
}

struct QuestionRow {
  std::string question_id;
  std::string question;
  std::string ground_truth;
};

std::vector<QuestionRow> read_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read questions file '" + path + "'");
  std::vector<QuestionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    auto str = [&](const char* k) -> std::string {
      if (j.is_discarded() || !j.contains(k) || !j[k].is_string()) {
        throw Error("bad_record", path + ":" + std::to_string(lineno) + ": missing string field '" + k + "'");
      }
      return j[k].get<std::string>();
    };
    rows.push_back({str("question_id"), str("question"), str("ground_truth")});
  }
  if (rows.empty()) throw Error("bad_record", "questions file '" + path + "' has no records");
  return rows;
}

ToyEnvironment load_environment(const RunConfig& cfg) {
  if (cfg.toy.questions.empty()) return ToyEnvironment::standard();
  std::vector<ToyQuestionInput> inputs;
  for (const auto& r : read_questions(cfg.toy.questions)) inputs.push_back({r.question_id, r.question});
  return ToyEnvironment::from_questions(inputs);
}

void write_text(const std::string& path, const std::string& text) {
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("io_error", "write to '" + path + "' failed");
}

Json stats_to_json(const FilterStats& s) {
  return Json{{"total", s.total},
              {"kept", s.kept},
              {"dropped_mismatch", s.dropped_mismatch},
              {"dropped_unanswered", s.dropped_unanswered},
              {"duplicates", s.duplicates},
              {"malformed_lines", s.malformed_lines}};
}

// ---------------------------------------------------------------- sandbox

int cmd_sandbox_serve(const ConfigArgs& args) {
  RunConfig cfg = args.resolve("sandbox serve");
  std::shared_ptr<const SearchBackend> backend;
  if (!cfg.sandbox.corpus.empty()) backend = LexicalIndex::load(cfg.sandbox.corpus);
  SandboxOptions opts;
  opts.call_deadline = std::chrono::milliseconds(cfg.sandbox.call_deadline_ms);
  auto sandbox = std::make_shared<const Sandbox>(backend, opts);
  auto handle = serve(sandbox, BindAddress::parse(cfg.sandbox.bind));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  log_event(Json{{"event", "listening"}, {"url", handle->url()}});
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  handle->stop();
  log_event(Json{{"event", "stopped"}});
  return 0;
}

// ---------------------------------------------------------------- teacher

int cmd_teacher_gen(const ConfigArgs& args, const std::string& questions_path, const std::string& out_path) {
  RunConfig cfg = args.resolve("teacher gen");
  auto rows = read_questions(questions_path);
  auto executor = make_executor(cfg);

  std::unique_ptr<GenerationClient> client;
  double temperature = cfg.orchestrator.temperature;
  if (cfg.orchestrator.client == "toy") {
    std::vector<ToyQuestionInput> inputs;
    for (const auto& r : rows) inputs.push_back({r.question_id, r.question});
    auto env = std::make_shared<const ToyEnvironment>(ToyEnvironment::from_questions(inputs));
    client = std::make_unique<ToyPolicyClient>(env, toy_expert_parameters(*env), cfg.toy.max_calls, "toy-expert");
    temperature = 0.0;
  } else {
    client = std::make_unique<ChatCompletionClient>(cfg.orchestrator.endpoint, cfg.orchestrator.model);
  }
  log_event(Json{{"event", "client"}, {"identity", client->identity()}});

  GenerationLimits limits{cfg.orchestrator.max_tool_steps, cfg.orchestrator.max_turns};
  ReferenceStore store;
  store.set_source(questions_path);
  std::vector<TrajectoryRecord> kept;
  for (const auto& r : rows) {
    SamplingOptions opts{derive_seed(cfg.grpo.seed, r.question_id, 0), temperature};
    auto rec = generate_reference(r.question_id, r.question, r.ground_truth, *client, *executor, store, limits, opts);
    if (!rec) continue;
    TrajectoryRecord out;
    out.question_id = rec->question_id;
    out.role = Role::teacher;
    out.trajectory = rec->teacher_trajectory;
    out.question = rec->question;
    out.ground_truth = rec->ground_truth;
    kept.push_back(std::move(out));
  }
  write_trajectory_log(out_path, kept);
  log_event(Json{{"event", "teacher_gen_done"}, {"out", out_path}, {"filter", stats_to_json(store.stats())}});
  return 0;
}

// ---------------------------------------------------------------- rewards

int cmd_rewards_score(const ConfigArgs& args, const std::string& out_path) {
  RunConfig cfg = args.resolve("rewards score");
  if (cfg.paths.references.empty() || cfg.paths.rollouts.empty()) {
    throw Error("config_error", "rewards score needs --references and --rollouts");
  }
  ReferenceStore refs = ingest_references(cfg.paths.references, warn);
  LogReadResult rollouts = read_trajectory_log(cfg.paths.rollouts, warn);
  std::vector<TrajectoryRecord> scored;
  double total = 0.0;
  for (auto& rec : rollouts.records) {
    const ReferenceRecord* ref = refs.find(rec.question_id);
    if (ref == nullptr) {
      warn("no reference for question '" + rec.question_id + "'; rollout skipped");
      continue;
    }
    RewardBreakdown b = score_rollout(rec.trajectory, *ref, cfg.rewards);
    total += b.total;
    rec.reward = breakdown_to_json(b, cfg.rewards.setting);
    scored.push_back(std::move(rec));
  }
  write_trajectory_log(out_path, scored);
  log_event(Json{{"event", "rewards_done"},
                 {"scored", scored.size()},
                 {"mean_total", scored.empty() ? 0.0 : total / static_cast<double>(scored.size())}});
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train_toy(const ConfigArgs& args) {
  RunConfig cfg = args.resolve("train toy");
  if (cfg.paths.reports.empty()) throw Error("config_error", "train toy needs --report");
  ToyEnvironment env = load_environment(cfg);
  auto executor = make_executor(cfg);
  ReferenceStore refs = cfg.paths.references.empty() ? toy_references(env, *executor)
                                                      : ingest_references(cfg.paths.references, warn);
  log_event(Json{{"event", "references"}, {"source", refs.source()}, {"filter", stats_to_json(refs.stats())}});

  TrainOptions opts;
  opts.threads = cfg.toy.threads;
  opts.max_calls = cfg.toy.max_calls;
  opts.on_iteration = [&](const IterationMetrics& m) {
    if (m.iter % 50 == 0 || m.iter + 1 == cfg.grpo.iterations) log_event(Json{{"progress", metrics_to_json(m)}});
  };
  auto started = std::chrono::steady_clock::now();
  TrainingReport report = train_toy(env, refs, cfg.rewards, cfg.grpo, *executor, opts);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text(cfg.paths.reports, report.to_jsonl());
  log_event(Json{{"event", "train_done"},
                 {"report", cfg.paths.reports},
                 {"seconds", seconds},
                 {"last10", metrics_to_json(report.tail_mean(10))}});
  return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval_em(const std::string& input, const std::string& out_path) {
  std::ifstream in(input);
  if (!in) throw Error("io_error", "cannot read '" + input + "'");
  std::vector<std::string> preds;
  std::vector<std::vector<std::string>> golds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    std::string where = input + ":" + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object()) throw Error("bad_record", where + ": not a JSON object");
    std::string pred;
    if (j.contains("prediction") && j["prediction"].is_string()) {
      pred = j["prediction"].get<std::string>();
    } else if (j.contains("raw_text") && j["raw_text"].is_string()) {
      pred = extract_answer(j["raw_text"].get<std::string>()).value_or("");
    } else if (!(j.contains("prediction") && j["prediction"].is_null())) {
      throw Error("bad_record", where + ": needs 'prediction' or 'raw_text'");
    }
    std::vector<std::string> g;
    if (j.contains("golds") && j["golds"].is_array()) {
      for (const auto& v : j["golds"]) {
        if (!v.is_string()) throw Error("bad_record", where + ": golds must be strings");
        g.push_back(v.get<std::string>());
      }
    } else if (j.contains("ground_truth") && j["ground_truth"].is_string()) {
      g.push_back(j["ground_truth"].get<std::string>());
    } else {
      throw Error("bad_record", where + ": needs 'golds' or 'ground_truth'");
    }
    preds.push_back(std::move(pred));
    golds.push_back(std::move(g));
  }
  Json result{{"em", exact_match(preds, golds)}, {"n", preds.size()}};
  if (out_path.empty()) {
    std::cout << result.dump() << '\n';
  } else {
    write_text(out_path, result.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------- analyze

Json summary_to_json(const FiveNumberSummary& s) {
  return Json{{"min", s.min},       {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3},
              {"max", s.max},       {"lower_fence", s.lower_fence},
              {"upper_fence", s.upper_fence}, {"outliers", s.outliers}};
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

std::string metrics_table(const MetricsReport& m, const std::string& invalid_basis) {
  std::ostringstream o;
  auto row = [&](const std::string& k, const std::string& v) { o << std::left << std::setw(28) << k << v << '\n'; };
  row("metric", "value");
  row("exact_match", fixed(m.em));
  row("alignment_score", fixed(m.alignment));
  row("invalid_rate (" + invalid_basis + ")", fixed(m.invalid_rate));
  row("tool_usage_rate", fixed(m.usage_rate));
  o << '\n';
  o << std::left << std::setw(20) << "tool" << std::right << std::setw(10) << "student" << std::setw(10) << "teacher"
    << std::setw(12) << "delta_pp" << '\n';
  for (const auto& [name, d] : m.per_tool_delta) {
    o << std::left << std::setw(20) << name << std::right << std::setw(10) << fixed(m.student_distribution.at(name))
      << std::setw(10) << fixed(m.teacher_distribution.at(name)) << std::setw(12) << fixed(d, 2) << '\n';
  }
  auto calls = [&](const std::string& who, const std::optional<FiveNumberSummary>& s) {
    if (!s) return;
    o << '\n'
      << who << " calls/sample: min " << fixed(s->min, 2) << "  q1 " << fixed(s->q1, 2) << "  median "
      << fixed(s->median, 2) << "  q3 " << fixed(s->q3, 2) << "  max " << fixed(s->max, 2) << "  outliers "
      << s->outliers.size() << '\n';
  };
  calls("student", m.student_calls);
  calls("teacher", m.teacher_calls);
  return o.str();
}

int cmd_analyze(const ConfigArgs& args, const std::string& out_path, bool per_trajectory, const std::string& plot_dir,
                const std::vector<std::string>& training_reports) {
  RunConfig cfg = args.resolve("analyze");
  bool have_logs = !cfg.paths.references.empty() && !cfg.paths.rollouts.empty();
  if (!have_logs && (plot_dir.empty() || training_reports.empty())) {
    throw Error("config_error", "analyze needs --references and --rollouts, or --plot with --training-report");
  }
  if (have_logs) {
    if (out_path.empty()) throw Error("config_error", "analyze needs --out");
    ReferenceStore refs = ingest_references(cfg.paths.references, warn);
    LogReadResult rollouts = read_trajectory_log(cfg.paths.rollouts, warn);
    std::vector<Trajectory> student;
    std::vector<std::string> preds;
    std::vector<std::vector<std::string>> golds;
    for (const auto& rec : rollouts.records) {
      const ReferenceRecord* ref = refs.find(rec.question_id);
      if (ref == nullptr) {
        warn("no reference for question '" + rec.question_id + "'; rollout skipped");
        continue;
      }
      student.push_back(rec.trajectory);
      preds.push_back(rec.trajectory.final_answer.value_or(""));
      golds.push_back({ref->ground_truth});
    }
    if (student.empty()) throw Error("empty_sample", "no rollouts matched a reference");
    std::vector<Trajectory> teacher = refs.teacher_trajectories();

    MetricsReport m;
    m.em = exact_match(preds, golds);
    m.student_distribution = tool_name_histogram(student);
    m.teacher_distribution = tool_name_histogram(teacher);
    m.alignment = alignment_score(m.student_distribution, m.teacher_distribution);
    m.invalid_rate = per_trajectory ? invalid_trajectory_rate(student) : invalid_call_rate(student);
    m.usage_rate = tool_usage_rate(student);
    m.per_tool_delta = per_tool_delta(m.student_distribution, m.teacher_distribution);
    m.student_calls = calls_per_sample(student);
    m.teacher_calls = calls_per_sample(teacher);
    std::string basis = per_trajectory ? "per_trajectory" : "per_call";

    Json j{{"em", m.em},
           {"alignment", m.alignment},
           {"invalid_rate", m.invalid_rate},
           {"invalid_rate_basis", basis},
           {"usage_rate", m.usage_rate},
           {"per_tool_delta", m.per_tool_delta},
           {"student_distribution", m.student_distribution.probabilities},
           {"teacher_distribution", m.teacher_distribution.probabilities},
           {"student_calls_per_sample", summary_to_json(*m.student_calls)},
           {"teacher_calls_per_sample", summary_to_json(*m.teacher_calls)},
           {"n_rollouts", student.size()},
           {"n_references", teacher.size()}};
    write_text(out_path, j.dump(2) + "\n");
    write_text(out_path + ".txt", metrics_table(m, basis));
    log_event(Json{{"event", "analyze_done"}, {"out", out_path}, {"table", out_path + ".txt"}});
  }
  if (!plot_dir.empty()) {
    if (training_reports.empty()) throw Error("config_error", "--plot needs at least one --training-report");
    std::filesystem::create_directories(plot_dir);
    const std::vector<std::pair<std::string, std::string>> metrics{{"invalid_rate", "Invalid tool call rate"},
                                                                   {"tool_usage_rate", "Tool usage rate"},
                                                                   {"alignment_score", "Alignment score"},
                                                                   {"mean_reward", "Mean reward"}};
    std::vector<std::pair<std::string, std::vector<IterationMetrics>>> runs;
    for (const auto& p : training_reports) runs.emplace_back(std::filesystem::path(p).stem().string(), read_training_report(p));
    for (const auto& [key, title] : metrics) {
      std::vector<Series> series;
      double hi = 1.0;
      for (const auto& [label, iters] : runs) {
        Series s{label, {}};
        for (const auto& m : iters) {
          double v = metrics_to_json(m)[key].get<double>();
          s.values.push_back(v);
          hi = std::max(hi, v);
        }
        series.push_back(std::move(s));
      }
      write_text((std::filesystem::path(plot_dir) / (key + ".svg")).string(), svg_line_chart(title, series, 0.0, hi));
    }
    log_event(Json{{"event", "plots_written"}, {"dir", plot_dir}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-guided tool-use distillation toolkit"};
  app.set_version_flag("--version", std::string("mentor ") + MENTOR_VERSION);
  app.require_subcommand(1);

  ConfigArgs cfg;

  // sandbox serve
  auto* sandbox = app.add_subcommand("sandbox", "Tool sandbox service")->require_subcommand(1);
  auto* serve_cmd = sandbox->add_subcommand("serve", "Serve /execute, /tools and /health over HTTP");
  std::string bind, corpus;
  std::uint64_t deadline_ms = 0;
  serve_cmd->add_option("--bind", bind, "Listen address <addr:port>");
  serve_cmd->add_option("--corpus", corpus, "Search corpus (JSONL {id,title,text})");
  serve_cmd->add_option("--deadline-ms", deadline_ms, "Per-call deadline in milliseconds");
  cfg.add_to(serve_cmd);

  // teacher gen
  auto* teacher = app.add_subcommand("teacher", "Teacher reference generation")->require_subcommand(1);
  auto* gen_cmd = teacher->add_subcommand("gen", "Generate and filter teacher trajectories");
  std::string client, questions, out, sandbox_url, model;
  gen_cmd->add_option("--client", client, "'toy' or a chat-completions base URL")->required();
  gen_cmd->add_option("--model", model, "Model name sent to a chat-completions endpoint");
  gen_cmd->add_option("--questions", questions, "JSONL {question_id, question, ground_truth}")->required();
  gen_cmd->add_option("--sandbox", sandbox_url, "Sandbox service URL (default: in-process)");
  gen_cmd->add_option("--out", out, "Output trajectory log")->required();
  cfg.add_to(gen_cmd);

  // rewards score
  auto* rewards = app.add_subcommand("rewards", "Reward computation")->require_subcommand(1);
  auto* score_cmd = rewards->add_subcommand("score", "Score student rollouts against teacher references");
  std::string references, rollouts;
  score_cmd->add_option("--references", references, "Teacher trajectory log");
  score_cmd->add_option("--rollouts", rollouts, "Student trajectory log");
  score_cmd->add_option("--out", out, "Output log with a reward field per record")->required();
  cfg.add_to(score_cmd);

  // train toy
  auto* train = app.add_subcommand("train", "Policy training")->require_subcommand(1);
  auto* toy_cmd = train->add_subcommand("toy", "GRPO on the synthetic arithmetic environment");
  std::string report, setting;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations, threads;
  toy_cmd->add_option("--references", references, "Teacher trajectory log (default: expert policy)");
  toy_cmd->add_option("--sandbox", sandbox_url, "Sandbox service URL (default: in-process)");
  toy_cmd->add_option("--report", report, "Training report output (JSONL)");
  toy_cmd->add_option("--questions", questions, "Toy questions file (default: built-in set)");
  toy_cmd->add_option("--setting", setting, "Reward setting S1..S5");
  toy_cmd->add_option("--seed", seed, "Run seed");
  toy_cmd->add_option("--iterations", iterations, "Training iterations");
  toy_cmd->add_option("--threads", threads, "Rollout worker threads");
  cfg.add_to(toy_cmd);

  // eval em
  auto* eval = app.add_subcommand("eval", "Evaluation")->require_subcommand(1);
  auto* em_cmd = eval->add_subcommand("em", "Exact match over normalized answers");
  std::string input;
  em_cmd->add_option("--input", input, "JSONL {prediction|raw_text, golds|ground_truth}")->required();
  em_cmd->add_option("--out", out, "Output JSON (default: stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Tool-use metrics and training curves");
  bool per_trajectory = false;
  std::string plot_dir;
  std::vector<std::string> training_reports;
  analyze->add_option("--references", references, "Teacher trajectory log");
  analyze->add_option("--rollouts", rollouts, "Student trajectory log");
  analyze->add_option("--out", out, "Metrics report (JSON); a .txt table is written alongside");
  analyze->add_flag("--per-trajectory", per_trajectory, "Invalid rate over trajectories instead of calls");
  analyze->add_option("--plot", plot_dir, "Directory for SVG curves");
  analyze->add_option("--training-report", training_reports, "Training report(s) to plot");
  cfg.add_to(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (!references.empty()) cfg.set("paths.references", references);
    if (!rollouts.empty()) cfg.set("paths.rollouts", rollouts);
    if (!sandbox_url.empty()) cfg.set("sandbox.url", sandbox_url);

    if (serve_cmd->parsed()) {
      if (!bind.empty()) cfg.set("sandbox.bind", bind);
      if (!corpus.empty()) cfg.set("sandbox.corpus", corpus);
      if (deadline_ms != 0) cfg.set("sandbox.call_deadline_ms", deadline_ms);
      return cmd_sandbox_serve(cfg);
    }
    if (gen_cmd->parsed()) {
      if (client == "toy") {
        cfg.set("orchestrator.client", "toy");
      } else {
        cfg.set("orchestrator.client", "chat");
        cfg.set("orchestrator.endpoint", client);
      }
      if (!model.empty()) cfg.set("orchestrator.model", model);
      return cmd_teacher_gen(cfg, questions, out);
    }
    if (score_cmd->parsed()) return cmd_rewards_score(cfg, out);
    if (toy_cmd->parsed()) {
      if (!report.empty()) cfg.set("paths.reports", report);
      if (!questions.empty()) cfg.set("toy.questions", questions);
      if (!setting.empty()) cfg.set("rewards.setting", setting);
      if (seed) cfg.set("grpo.seed", *seed);
      if (iterations) cfg.set("grpo.iterations", *iterations);
      if (threads) cfg.set("toy.threads", *threads);
      return cmd_train_toy(cfg);
    }
    if (em_cmd->parsed()) return cmd_eval_em(input, out);
    if (analyze->parsed()) return cmd_analyze(cfg, out, per_trajectory, plot_dir, training_reports);
  } catch (const Error& e) {
    report_error(e.code(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  report_error("usage", "no command given");
  return 2;
}
