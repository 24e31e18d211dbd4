// poc — purpose-of-call detection engine CLI.
//
// One subcommand per pipeline stage: synth, detect, serve, bootstrap, train,
// eval, simplify. Exit codes: 0 success, 1 usage, 2 data error, 3 runtime.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "poc/bootstrap.hpp"
#include "poc/detector.hpp"
#include "poc/evaluate.hpp"
#include "poc/model.hpp"
#include "poc/rules.hpp"
#include "poc/scoring.hpp"
#include "poc/selection.hpp"
#include "poc/service.hpp"
#include "poc/simplify.hpp"
#include "poc/synth.hpp"
#include "poc/transcript.hpp"

using nlohmann::json;

namespace {

struct DetectorParts {
    std::shared_ptr<const poc::PatternEngine> engine;
    std::shared_ptr<const poc::Simplifier> simplifier;
    poc::RuleBundle bundle;
};

DetectorParts load_parts(const std::string& rules_path) {
    DetectorParts parts;
    parts.bundle = poc::load_rules(rules_path);
    parts.engine = std::make_shared<const poc::PatternEngine>(parts.bundle.patterns);
    parts.simplifier = std::make_shared<const poc::Simplifier>(parts.bundle.simplification);
    return parts;
}

std::shared_ptr<const poc::Scorer> make_scorer(const DetectorParts& parts,
                                               const std::string& model_path,
                                               const poc::Corpus* oracle_corpus) {
    if (oracle_corpus) return std::make_shared<const poc::OracleScorer>(*oracle_corpus);
    if (!model_path.empty()) {
        return std::make_shared<const poc::TrainedScorer>(poc::TrainedScorer::load(model_path));
    }
    return std::make_shared<const poc::RuleScorer>(parts.engine);
}

json decision_record(const std::string& call_id,
                     const std::optional<poc::PurposeDecision>& decision) {
    if (!decision) return json{{"type", "miss"}, {"call_id", call_id}};
    json record{{"type", "decision"},
                {"call_id", call_id},
                {"utterance_index", decision->utterance_index},
                {"combined_score", decision->combined_score},
                {"text", decision->original_text},
                {"simplified_text", decision->simplified_text}};
    std::vector<std::string> tags;
    for (poc::PatternTag tag : decision->tags) tags.emplace_back(poc::to_string(tag));
    record["tags"] = tags;
    return record;
}

int run_synth(const std::string& out_path, const std::string& templates_path, poc::GenSpec spec) {
    poc::TemplateLibrary templates = poc::TemplateLibrary::load(templates_path);
    poc::Corpus corpus = poc::generate(spec, templates);
    poc::save_corpus(corpus, out_path);
    std::cerr << "wrote " << corpus.calls.size() << " calls to " << out_path << "\n";
    return 0;
}

int run_detect(const std::string& rules_path, const std::string& model_path, bool oracle,
               const std::string& input_path, const std::string& out_path) {
    DetectorParts parts = load_parts(rules_path);
    poc::Corpus corpus = poc::load_corpus(input_path);
    if (corpus.calls.empty()) {
        throw poc::ValidationError("input corpus '" + input_path + "' holds no calls");
    }
    auto scorer = make_scorer(parts, model_path, oracle ? &corpus : nullptr);
    poc::Detector detector(parts.engine, scorer, parts.simplifier);

    std::ofstream out(out_path);
    if (!out) throw poc::ConfigError("cannot write decisions file: " + out_path);
    std::size_t hits = 0;
    for (const poc::Call& call : corpus.calls) {
        auto result = detector.run_call(call);
        if (result.decision) ++hits;
        out << decision_record(call.call_id, result.decision).dump() << '\n';
    }
    std::cerr << "decided " << hits << "/" << corpus.calls.size() << " calls into " << out_path
              << "\n";
    return 0;
}

int run_bootstrap(const std::string& rules_path, const std::string& input_path,
                  const std::string& out_path, poc::SamplingSpec spec) {
    DetectorParts parts = load_parts(rules_path);
    poc::Detector detector(parts.engine, std::make_shared<const poc::RuleScorer>(parts.engine),
                           parts.simplifier);
    poc::Corpus corpus = poc::load_corpus(input_path);
    auto rows = poc::weak_label(corpus.calls, detector);
    rows = poc::filter_false_positives(std::move(rows), parts.bundle.false_positive_rules);
    poc::Dataset dataset = poc::resample(rows, spec);

    std::ofstream out(out_path);
    if (!out) throw poc::ConfigError("cannot write dataset file: " + out_path);
    poc::write_dataset(out, dataset);
    std::cerr << "sampled " << dataset.rows.size() << " rows from " << rows.size()
              << " weakly labeled utterances into " << out_path << "\n";
    return 0;
}

int run_train(const std::string& input_path, const std::string& out_path, poc::TrainConfig config,
              bool ablation) {
    std::ifstream in(input_path);
    if (!in) throw poc::ConfigError("cannot open dataset file: " + input_path);
    poc::Dataset dataset = poc::read_dataset(in);

    auto train_rows = poc::to_training_examples(dataset.split("train"));
    auto dev_rows = poc::to_training_examples(dataset.split("dev"));
    if (train_rows.empty()) {
        throw poc::ValidationError("dataset has no train split rows");
    }

    if (ablation) {
        auto rows = poc::ablation_harness(train_rows, dev_rows, config);
        std::cout << "variant\taccuracy\tmacro_f1\n";
        for (const auto& row : rows) {
            std::cout << row.variant << '\t' << row.metrics.accuracy << '\t'
                      << row.metrics.macro_f1 << '\n';
        }
        return 0;
    }

    poc::TrainedScorer scorer = poc::train(train_rows, config);
    scorer.save(out_path);
    std::cerr << "trained on " << train_rows.size() << " rows (final loss "
              << scorer.meta().final_train_loss << "), wrote " << out_path << "\n";
    if (!dev_rows.empty()) {
        auto metrics = poc::evaluate_examples(scorer, dev_rows);
        std::cerr << "dev accuracy " << metrics.accuracy << ", macro-F1 " << metrics.macro_f1
                  << " (majority baseline " << poc::majority_fraction(dev_rows) << ")\n";
    }
    return 0;
}

int run_eval(const std::string& input_path, const std::string& decisions_path,
             const std::string& format, const std::string& label) {
    poc::Corpus corpus = poc::load_corpus(input_path);

    std::ifstream in(decisions_path);
    if (!in) throw poc::ConfigError("cannot open decisions file: " + decisions_path);
    poc::DecisionMap decisions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw poc::ParseError(std::string("bad decision record: ") + e.what(), line_no);
        }
        std::string call_id = record.value("call_id", "");
        if (record.value("type", "") == "decision") {
            decisions[call_id] = record.at("utterance_index").get<std::uint32_t>();
        } else {
            decisions[call_id] = std::nullopt;
        }
    }

    poc::EvalReport report = poc::evaluate(decisions, corpus);
    std::cout << poc::render_comparison({{label, report}}, format);
    return 0;
}

int run_simplify(const std::string& rules_path, const std::string& input_path, bool stats_only) {
    DetectorParts parts = load_parts(rules_path);
    std::istream* in = &std::cin;
    std::ifstream file;
    if (input_path != "-") {
        file.open(input_path);
        if (!file) throw poc::ConfigError("cannot open input file: " + input_path);
        in = &file;
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    while (std::getline(*in, line)) {
        if (line.empty()) continue;
        auto result = parts.simplifier->simplify(line);
        pairs.emplace_back(line, result.text);
        if (!stats_only) {
            json record{{"text", line},
                        {"simplified_text", result.text},
                        {"removed_spans", result.removed.size()}};
            std::cout << record.dump() << '\n';
        }
    }
    auto stats = poc::simplification_stats(pairs);
    std::cerr << "simplified fraction " << stats.fraction_simplified << ", mean length reduction "
              << stats.mean_length_reduction << "\n";
    return 0;
}

int run_serve(poc::ServiceConfig config, bool stdio) {
    DetectorParts parts = load_parts(config.rules_path);  // fail fast on bad rules/model
    auto scorer = make_scorer(parts, config.model_path, nullptr);
    poc::DetectorConfig detector_config{config.gate, config.thresholds};
    auto detector = std::make_shared<const poc::Detector>(parts.engine, scorer, parts.simplifier,
                                                          detector_config);
    auto processor = std::make_shared<poc::EventProcessor>(detector, config);

    if (stdio) {
        poc::run_pipe_mode(*processor, std::cin, std::cout);
        std::cerr << processor->stats().to_json() << "\n";
        return 0;
    }

    poc::StreamServer server(processor, config);
    server.start();
    std::cerr << "listening on port " << server.port();
    if (config.stats_port > 0) {
        std::cerr << ", stats on http://127.0.0.1:" << config.stats_port << "/stats";
    }
    std::cerr << "\n";
    server.wait();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"purpose-of-call detection engine"};
    app.require_subcommand(1);

    std::string rules_path = "data/default.rules";
    std::string templates_path = "data/templates.json";
    std::string model_path;
    std::string input_path, out_path;
    std::string format = "text";
    std::string label = "run";
    bool oracle = false;
    bool stdio = false;
    bool ablation = false;
    bool stats_only = false;

    poc::GenSpec gen_spec;
    poc::SamplingSpec sampling_spec;
    poc::TrainConfig train_config;
    poc::ServiceConfig service_config;
    std::string config_path;
    std::uint32_t hash_bits = 18;

    auto* synth = app.add_subcommand("synth", "generate a gold-annotated synthetic corpus");
    synth->add_option("--out", out_path, "output corpus (jsonl)")->required();
    synth->add_option("--n", gen_spec.n_calls, "number of calls");
    synth->add_option("--seed", gen_spec.seed, "random seed");
    synth->add_option("--templates", templates_path, "template library (json)");
    synth->add_option("--no-purpose-rate", gen_spec.no_purpose_rate,
                      "share of calls with no explicit purpose");
    synth->add_option("--mix-call-purpose", gen_spec.mix_call_purpose, "pattern-mix weight");
    synth->add_option("--mix-desire", gen_spec.mix_desire, "pattern-mix weight");
    synth->add_option("--mix-question-response", gen_spec.mix_question_response,
                      "pattern-mix weight");
    synth->add_option("--mix-greeting", gen_spec.mix_greeting, "pattern-mix weight");
    synth->add_option("--mix-problem", gen_spec.mix_problem, "pattern-mix weight");
    synth->add_option("--mix-update", gen_spec.mix_update, "pattern-mix weight");
    synth->add_option("--mix-continuation", gen_spec.mix_continuation, "pattern-mix weight");

    auto* detect = app.add_subcommand("detect", "batch purpose detection over a corpus");
    detect->add_option("--rules", rules_path, "rules file");
    detect->add_option("--model", model_path, "trained scorer model file (default: rule scorer)");
    detect->add_flag("--oracle", oracle, "score with the gold annotations (diagnostics)");
    detect->add_option("--input", input_path, "input corpus (jsonl)")->required();
    detect->add_option("--out", out_path, "output decisions file (jsonl)")->required();

    auto* serve = app.add_subcommand("serve", "streaming detection service");
    serve->add_option("--config", config_path, "service config file (json)");
    serve->add_option("--rules", rules_path, "rules file");
    serve->add_option("--model", model_path, "trained scorer model file");
    serve->add_option("--listen", service_config.listen_address, "host:port for the event stream");
    serve->add_option("--stats-port", service_config.stats_port, "HTTP stats endpoint port");
    serve->add_flag("--stdio", stdio, "read events from stdin, write updates to stdout");

    auto* bootstrap =
        app.add_subcommand("bootstrap", "weak-label a corpus and resample training data");
    bootstrap->add_option("--rules", rules_path, "rules file");
    bootstrap->add_option("--input", input_path, "input corpus (jsonl)")->required();
    bootstrap->add_option("--out", out_path, "output dataset (jsonl)")->required();
    bootstrap->add_option("--size", sampling_spec.size, "dataset size");
    bootstrap->add_option("--seed", sampling_spec.seed, "random seed");

    auto* train_cmd = app.add_subcommand("train", "train the gated-fusion scorer");
    train_cmd->add_option("--input", input_path, "dataset file (jsonl)")->required();
    train_cmd->add_option("--out", out_path, "output model file");
    train_cmd->add_option("--epochs", train_config.epochs, "training epochs");
    train_cmd->add_option("--lr", train_config.learning_rate, "learning rate");
    train_cmd->add_option("--weight-decay", train_config.weight_decay, "weight decay");
    train_cmd->add_option("--seed", train_config.seed, "random seed");
    train_cmd->add_option("--hidden", train_config.hidden, "hidden dimension");
    train_cmd->add_option("--hash-bits", hash_bits, "hashed feature space size (log2)");
    train_cmd->add_flag("--no-start-time", "drop the start-time feature");
    train_cmd->add_flag("--no-side", "drop the call-side feature");
    train_cmd->add_flag("--ablation", ablation, "report the four feature-ablation rows");

    auto* eval = app.add_subcommand("eval", "score decisions against gold annotations");
    eval->add_option("--input", input_path, "gold corpus (jsonl)")->required();
    eval->add_option("--decisions", out_path, "decisions file from detect")->required();
    eval->add_option("--format", format, "text | tsv")->check(CLI::IsMember({"text", "tsv"}));
    eval->add_option("--label", label, "model label in the report");

    auto* simplify = app.add_subcommand("simplify", "strip purpose-irrelevant spans from text");
    simplify->add_option("--rules", rules_path, "rules file");
    simplify->add_option("--input", input_path, "text file, one utterance per line ('-' = stdin)")
        ->required();
    simplify->add_flag("--stats", stats_only, "print only aggregate statistics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) return run_synth(out_path, templates_path, gen_spec);
        if (*detect) return run_detect(rules_path, model_path, oracle, input_path, out_path);
        if (*bootstrap) return run_bootstrap(rules_path, input_path, out_path, sampling_spec);
        if (*train_cmd) {
            train_config.featurizer.hash_dim = 1u << hash_bits;
            train_config.mask.use_start_time = train_cmd->count("--no-start-time") == 0;
            train_config.mask.use_side = train_cmd->count("--no-side") == 0;
            if (!ablation && out_path.empty()) {
                throw poc::ConfigError("train needs --out unless --ablation is set");
            }
            return run_train(input_path, out_path, train_config, ablation);
        }
        if (*eval) return run_eval(input_path, out_path, format, label);
        if (*simplify) return run_simplify(rules_path, input_path, stats_only);
        if (*serve) {
            if (!config_path.empty()) {
                poc::ServiceConfig from_file = poc::load_service_config(config_path);
                // Explicit flags win over the file.
                if (serve->count("--rules") == 0) rules_path = from_file.rules_path;
                if (serve->count("--model") == 0) model_path = from_file.model_path;
                if (serve->count("--listen") == 0) {
                    service_config.listen_address = from_file.listen_address;
                }
                if (serve->count("--stats-port") == 0) {
                    service_config.stats_port = from_file.stats_port;
                }
                service_config.gate = from_file.gate;
                service_config.thresholds = from_file.thresholds;
                service_config.max_sessions = from_file.max_sessions;
                service_config.deadline_s = from_file.deadline_s;
                service_config.idle_timeout_s = from_file.idle_timeout_s;
            }
            service_config.rules_path = rules_path;
            service_config.model_path = model_path;
            return run_serve(service_config, stdio);
        }
    } catch (const poc::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const poc::ValidationError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const poc::ConfigError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const poc::TrainingError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
