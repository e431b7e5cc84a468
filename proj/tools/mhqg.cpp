// Command-line front end: preprocessing, the three training stages,
// generation and evaluation. Exit codes: 0 success, 1 usage or validation
// error, 2 runtime failure.

#include "mhqg/config.hpp"
#include "mhqg/corpus.hpp"
#include "mhqg/hashing.hpp"
#include "mhqg/metrics.hpp"
#include "mhqg/reward_model.hpp"
#include "mhqg/synthetic.hpp"
#include "mhqg/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mhqg;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr const char* kDataRootEnv = "MHQG_DATA_ROOT";
const char* const kSplits[] = {"train", "dev", "test"};

fs::path data_root() {
    const char* root = std::getenv(kDataRootEnv);
    if (root == nullptr || *root == '\0') return {};
    return root;
}

// An explicit flag wins; otherwise the path is taken relative to the data root.
fs::path resolve(const std::string& flag, const char* name, const fs::path& default_under_root) {
    if (!flag.empty()) return flag;
    auto root = data_root();
    if (root.empty()) throw UsageError(std::string("--") + name + " is required when " + kDataRootEnv + " is unset");
    return root / default_under_root;
}

void require_exists(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw UsageError(what + " not found: " + path.string());
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

struct Manifest {
    explicit Manifest(std::string name) : command(std::move(name)) {}

    std::string command;
    json seeds = json::object();
    std::string config_hash;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void write(const fs::path& path) const {
        auto checksums = [](const std::vector<fs::path>& paths) {
            json out = json::array();
            for (const auto& p : paths) {
                if (fs::is_regular_file(p)) out.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
            }
            return out;
        };
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_json(path, {{"command", command},
                          {"config_hash", config_hash},
                          {"seeds", seeds},
                          {"inputs", checksums(inputs)},
                          {"outputs", checksums(outputs)},
                          {"wall_clock_seconds", seconds}});
    }
};

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
};

TrainingConfig load_config(const CommonFlags& flags) {
    TrainingConfig config;
    if (!flags.config.empty()) {
        require_exists(flags.config, "config file");
        config = TrainingConfig::load(flags.config);
    }
    if (flags.seed) config.seed = *flags.seed;
    config.validate();
    return config;
}

struct ProcessedData {
    fs::path dir;
    Vocabulary vocab;
    std::map<std::string, std::vector<ProcessedExample>> splits;
};

ProcessedData load_processed(const fs::path& dir, std::initializer_list<const char*> names) {
    require_exists(dir / "vocab.txt", "vocabulary");
    ProcessedData data{dir, Vocabulary::load(dir / "vocab.txt"), {}};
    for (const char* name : names) {
        auto path = dir / (std::string(name) + ".jsonl");
        require_exists(path, std::string(name) + " split");
        data.splits[name] = read_jsonl(path);
    }
    return data;
}

std::vector<QAExample> raw_examples(const std::vector<ProcessedExample>& processed) {
    std::vector<QAExample> out;
    out.reserve(processed.size());
    for (const auto& p : processed) out.push_back(p.example);
    return out;
}

// ------------------------------------------------------------------ commands

struct PreprocessArgs {
    std::vector<std::string> raw;
    std::string out;
};

int cmd_preprocess(const PreprocessArgs& args, const CommonFlags& common) {
    auto config = load_config(common);
    std::vector<fs::path> raw;
    for (const auto& r : args.raw) raw.emplace_back(r);
    if (raw.empty()) {
        auto root = data_root();
        if (root.empty()) throw UsageError(std::string("--raw is required when ") + kDataRootEnv + " is unset");
        for (const char* name : {"hotpot_train_v1.1.json", "hotpot_dev_distractor_v1.json"}) {
            if (fs::exists(root / name)) raw.push_back(root / name);
        }
        if (raw.empty()) throw UsageError("no HotPotQA files found under " + root.string());
    }
    for (const auto& p : raw) require_exists(p, "raw file");
    const fs::path out = resolve(args.out, "out", "processed");

    Manifest manifest{"preprocess"};
    manifest.seeds["split"] = config.seed;
    manifest.config_hash = config.hash();
    manifest.inputs = raw;

    std::vector<QAExample> pool;
    for (const auto& p : raw) {
        auto part = load_raw(p);
        pool.insert(pool.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    auto filtered = filter_examples(std::move(pool));
    auto split = split_dataset(filtered.examples, config.seed);
    auto vocab = build_vocabulary(split.train, static_cast<std::size_t>(config.max_vocab));

    fs::create_directories(out);
    vocab.save(out / "vocab.txt");
    manifest.outputs.push_back(out / "vocab.txt");
    json assignment = json::object();
    const std::vector<QAExample>* parts[] = {&split.train, &split.dev, &split.test};
    json sizes;
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<ProcessedExample> encoded;
        for (const auto& ex : *parts[i]) {
            encoded.push_back({ex, encode_example(ex, vocab)});
            assignment[ex.id] = kSplits[i];
        }
        auto path = out / (std::string(kSplits[i]) + ".jsonl");
        write_jsonl(path, encoded);
        manifest.outputs.push_back(path);
        sizes[kSplits[i]] = encoded.size();
    }
    write_json(out / "splits.json", assignment);
    write_json(out / "filter_report.json", filtered.report.to_json());
    manifest.outputs.push_back(out / "splits.json");
    manifest.outputs.push_back(out / "filter_report.json");
    manifest.write(out / "run_manifest.json");
    std::cout << json{{"kept", filtered.report.kept}, {"splits", sizes}, {"vocab_size", vocab.size()}}.dump() << '\n';
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string init;
    std::string reward;
    bool resume = false;
    std::optional<std::uint64_t> stop_after;
};

void print_record(const json& record) { std::cout << record.dump() << '\n'; }

int cmd_train_reward(const TrainArgs& args, const CommonFlags& common) {
    auto config = load_config(common);
    auto data = load_processed(resolve(args.data, "data", "processed"), {"train", "dev"});
    const fs::path out = resolve(args.out, "out", "runs/reward");
    fs::create_directories(out);

    Manifest manifest{"train-reward"};
    manifest.seeds["reward"] = config.seed;
    manifest.config_hash = config.hash();
    manifest.inputs = {data.dir / "train.jsonl", data.dir / "dev.jsonl"};

    RewardTrainOptions opts;
    opts.learning_rate = config.reward_lr;
    opts.steps = config.reward_steps;
    opts.batch_size = config.reward_batch_size;
    opts.eval_every = config.reward_eval_every;
    opts.min_first_epoch_f1 = config.reward_min_first_epoch_f1;
    opts.seed = config.seed;
    std::ofstream log(out / "reward_log.jsonl", std::ios::trunc);
    opts.log = [&](const json& record) {
        log << record.dump() << '\n';
        print_record(record);
    };
    auto result = train_reward_model(config.reward_model(), raw_examples(data.splits["train"]),
                                     raw_examples(data.splits["dev"]), opts);
    log.close();
    result.model->save(out / "reward.bin");
    write_json(out / "reward_summary.json", {{"best_dev_f1", result.best_dev_f1}, {"best_step", result.best_step}});
    manifest.outputs = {out / "reward.bin", out / "reward_log.jsonl", out / "reward_summary.json"};
    manifest.write(out / "run_manifest.json");
    return 0;
}

TrainOptions train_options(const TrainArgs& args, const fs::path& out) {
    TrainOptions opts;
    opts.run_dir = out;
    opts.resume = args.resume;
    opts.stop_after = args.stop_after;
    opts.on_log = print_record;
    return opts;
}

void finish_training(Manifest& manifest, const fs::path& out, const TrainOutcome& outcome) {
    write_json(out / "outcome.json", {{"final_step", outcome.final_step},
                                      {"interrupted", outcome.interrupted},
                                      {"best_dev_bleu", outcome.best_dev_bleu},
                                      {"best_step", outcome.best_step}});
    manifest.outputs = {out / "latest.ckpt", out / "best.ckpt", out / "train_log.jsonl", out / "outcome.json"};
    manifest.write(out / "run_manifest.json");
}

int cmd_train_mtl(const TrainArgs& args, const CommonFlags& common) {
    auto config = load_config(common);
    auto data = load_processed(resolve(args.data, "data", "processed"), {"train", "dev"});
    const fs::path out = resolve(args.out, "out", "runs/mtl");

    Manifest manifest{"train-mtl"};
    manifest.seeds["training"] = config.seed;
    manifest.config_hash = config.hash();
    manifest.inputs = {data.dir / "vocab.txt", data.dir / "train.jsonl", data.dir / "dev.jsonl"};
    auto outcome = train_mtl(config, data.vocab, data.splits["train"], data.splits["dev"], train_options(args, out));
    finish_training(manifest, out, outcome);
    return 0;
}

int cmd_train_rl(const TrainArgs& args, const CommonFlags& common) {
    if (args.init.empty()) throw UsageError("train-rl needs --init with a phase-1 checkpoint");
    if (args.reward.empty()) throw UsageError("train-rl needs --reward with a reward model checkpoint");
    require_exists(args.init, "initial checkpoint");
    require_exists(args.reward, "reward checkpoint");
    auto config = load_config(common);
    auto data = load_processed(resolve(args.data, "data", "processed"), {"train", "dev"});
    const fs::path out = resolve(args.out, "out", "runs/rl");

    Manifest manifest{"train-rl"};
    manifest.seeds["training"] = config.seed;
    manifest.config_hash = config.hash();
    manifest.inputs = {data.dir / "vocab.txt", data.dir / "train.jsonl", data.dir / "dev.jsonl", args.init, args.reward};
    auto reward_model = RewardModel::load(args.reward);
    auto reward = make_reward_fn(reward_model, config.reward_weights());
    auto outcome = train_rl(config, data.vocab, data.splits["train"], data.splits["dev"], args.init, reward,
                            train_options(args, out));
    finish_training(manifest, out, outcome);
    return 0;
}

struct GenerateArgs {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::optional<int> beam;
    std::string out;
};

int cmd_generate(const GenerateArgs& args, const CommonFlags&) {
    require_exists(args.checkpoint, "checkpoint");
    auto data = load_processed(resolve(args.data, "data", "processed"), {args.split.c_str()});
    auto ck = load_checkpoint(args.checkpoint);
    if (ck.meta.vocab_fingerprint != data.vocab.fingerprint()) {
        throw UsageError("checkpoint " + args.checkpoint + " was trained with a different vocabulary than " +
                         (data.dir / "vocab.txt").string());
    }
    auto config = TrainingConfig::from_json(ck.meta.config);
    const int beam = args.beam.value_or(config.beam_width);
    if (beam < 1) throw UsageError("--beam must be at least 1");
    if (args.out.empty()) throw UsageError("generate needs --out");
    const fs::path out = args.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    Manifest manifest{"generate"};
    manifest.config_hash = ck.meta.config_hash;
    manifest.seeds["training"] = config.seed;
    manifest.inputs = {args.checkpoint, data.dir / (args.split + ".jsonl"), data.dir / "vocab.txt"};
    std::ofstream file(out, std::ios::trunc);
    for (const auto& ex : data.splits[args.split]) {
        auto result = ck.model->generate(ex.encoded, beam, config.max_decode_len);
        auto tokens = decode_extended(result.tokens, data.vocab, ex.encoded.oov_list);
        file << json{{"id", ex.example.id},
                     {"generated_question", join_tokens(tokens)},
                     {"log_prob", result.log_prob},
                     {"beam_width", beam}}
                    .dump()
             << '\n';
    }
    file.close();
    manifest.outputs = {out};
    auto manifest_path = out;
    manifest_path += ".manifest.json";
    manifest.write(manifest_path);
    return 0;
}

struct EvaluateArgs {
    std::string generations;
    std::string compare;
    std::string data;
    std::string split = "test";
    std::string reward;
    std::string meteor;
    std::string out;
};

std::map<std::string, Tokens> read_generations(const fs::path& path) {
    require_exists(path, "generation file");
    std::map<std::string, Tokens> out;
    std::ifstream in(path);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("generated_question")) {
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": not a generation record");
        }
        out[j["id"].get<std::string>()] = tokenize(j["generated_question"].get<std::string>());
    }
    return out;
}

// Hypotheses in split order; every split id must be present and nothing else.
std::vector<Tokens> align(const std::map<std::string, Tokens>& generations, const std::vector<ProcessedExample>& split,
                          const std::string& label) {
    std::vector<Tokens> out;
    std::vector<std::string> missing;
    std::set<std::string> known;
    for (const auto& ex : split) {
        known.insert(ex.example.id);
        auto it = generations.find(ex.example.id);
        if (it == generations.end()) {
            missing.push_back(ex.example.id);
        } else {
            out.push_back(it->second);
        }
    }
    std::vector<std::string> extra;
    for (const auto& [id, _] : generations) {
        if (!known.count(id)) extra.push_back(id);
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = label + " is not aligned with the split:";
        if (!missing.empty()) msg += " missing ids " + json(missing).dump();
        if (!extra.empty()) msg += " unknown ids " + json(extra).dump();
        throw UsageError(msg);
    }
    return out;
}

int cmd_evaluate(const EvaluateArgs& args, const CommonFlags& common) {
    auto config = load_config(common);
    auto data = load_processed(resolve(args.data, "data", "processed"), {args.split.c_str()});
    const auto& split = data.splits[args.split];
    if (args.out.empty()) throw UsageError("evaluate needs --out");

    Manifest manifest{"evaluate"};
    manifest.config_hash = config.hash();
    manifest.seeds["bootstrap"] = config.seed;
    manifest.inputs = {args.generations, data.dir / (args.split + ".jsonl")};

    EvaluationInput input;
    input.hypotheses = align(read_generations(args.generations), split, args.generations);
    for (const auto& ex : split) {
        input.ids.push_back(ex.example.id);
        input.references.push_back(ex.example.question);
        input.examples.push_back(ex.example);
    }
    std::unique_ptr<RewardModel> reward;
    if (!args.reward.empty()) {
        require_exists(args.reward, "reward checkpoint");
        reward = std::make_unique<RewardModel>(RewardModel::load(args.reward));
        manifest.inputs.push_back(args.reward);
    }
    std::optional<fs::path> meteor;
    if (!args.meteor.empty()) meteor = fs::path(args.meteor);
    auto report = evaluation_report(input, reward.get(), meteor);
    report["split"] = args.split;
    report["config_hash"] = config.hash();
    report["seeds"] = {{"bootstrap", config.seed}};

    if (!args.compare.empty()) {
        manifest.inputs.push_back(args.compare);
        auto other = align(read_generations(args.compare), split, args.compare);
        auto mine = rouge_l_scores(input.hypotheses, input.references);
        auto theirs = rouge_l_scores(other, input.references);
        // One-sided: how often this system fails to beat the comparison system.
        report["comparison"] = {{"against", args.compare},
                                {"metric", "rouge_l"},
                                {"iterations", 10000},
                                {"p_value", bootstrap_significance(mine, theirs, 10000, config.seed)}};
    }
    write_json(args.out, report);
    manifest.outputs = {args.out};
    std::string manifest_path = args.out + ".manifest.json";
    manifest.write(manifest_path);
    std::cout << report["metrics"].dump() << '\n';
    return 0;
}

struct SyntheticArgs {
    SyntheticOptions options;
    std::string out;
};

int cmd_make_synthetic(const SyntheticArgs& args, const CommonFlags& common) {
    if (args.out.empty()) throw UsageError("make-synthetic needs --out");
    SyntheticOptions opts = args.options;
    if (common.seed) opts.seed = *common.seed;
    write_json(args.out, make_synthetic_hotpot(opts));
    Manifest manifest{"make-synthetic"};
    manifest.seeds["synthetic"] = opts.seed;
    manifest.outputs = {args.out};
    manifest.write(args.out + ".manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-hop question generation"};
    app.require_subcommand(1);
    CommonFlags common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config, "JSON config with every key present");
        cmd->add_option("--seed", common.seed, "Override the config seed");
    };

    PreprocessArgs pre;
    auto* c_pre = app.add_subcommand("preprocess", "Filter, split, build the vocabulary and encode raw HotPotQA files");
    c_pre->add_option("--raw", pre.raw, "Raw HotPotQA JSON files (default: files under $MHQG_DATA_ROOT)");
    c_pre->add_option("--out", pre.out, "Output directory (default: $MHQG_DATA_ROOT/processed)");
    add_common(c_pre);

    TrainArgs reward_args, mtl_args, rl_args;
    auto add_train = [&](CLI::App* cmd, TrainArgs& a) {
        cmd->add_option("--data", a.data, "Preprocessed data directory (default: $MHQG_DATA_ROOT/processed)");
        cmd->add_option("--out", a.out, "Run directory");
        add_common(cmd);
    };
    auto* c_reward = app.add_subcommand("train-reward", "Train the question-aware supporting-fact reward model");
    add_train(c_reward, reward_args);
    auto* c_mtl = app.add_subcommand("train-mtl", "Phase 1: question generation with the supporting-fact head");
    add_train(c_mtl, mtl_args);
    c_mtl->add_flag("--resume", mtl_args.resume, "Continue from latest.ckpt in the run directory");
    c_mtl->add_option("--stop-after", mtl_args.stop_after, "Checkpoint and stop after this step");
    auto* c_rl = app.add_subcommand("train-rl", "Phase 2: adaptive self-critical training");
    add_train(c_rl, rl_args);
    c_rl->add_option("--init", rl_args.init, "Phase-1 checkpoint to start from");
    c_rl->add_option("--reward", rl_args.reward, "Reward model checkpoint");
    c_rl->add_flag("--resume", rl_args.resume, "Continue from latest.ckpt in the run directory");
    c_rl->add_option("--stop-after", rl_args.stop_after, "Checkpoint and stop after this step");

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "Decode questions for one split");
    c_gen->add_option("--checkpoint", gen.checkpoint, "Generator checkpoint")->required();
    c_gen->add_option("--data", gen.data, "Preprocessed data directory (default: $MHQG_DATA_ROOT/processed)");
    c_gen->add_option("--split", gen.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    c_gen->add_option("--beam", gen.beam, "Beam width (default: from the checkpoint's config)");
    c_gen->add_option("--out", gen.out, "Output JSONL")->required();
    add_common(c_gen);

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Score a generation file against a split");
    c_eval->add_option("--generations", ev.generations, "Generation JSONL")->required();
    c_eval->add_option("--compare", ev.compare, "Second generation JSONL for a paired bootstrap test");
    c_eval->add_option("--data", ev.data, "Preprocessed data directory (default: $MHQG_DATA_ROOT/processed)");
    c_eval->add_option("--split", ev.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    c_eval->add_option("--reward", ev.reward, "Reward model checkpoint for SF coverage");
    c_eval->add_option("--meteor", ev.meteor, "METEOR jar or wrapper script");
    c_eval->add_option("--out", ev.out, "Report JSON")->required();
    add_common(c_eval);

    SyntheticArgs syn;
    auto* c_syn = app.add_subcommand("make-synthetic", "Write a templated HotPotQA-format corpus");
    c_syn->add_option("--count", syn.options.count, "Bridge records");
    c_syn->add_option("--distractors", syn.options.distractors, "Unrelated documents per record");
    c_syn->add_option("--comparison-fraction", syn.options.comparison_fraction, "Extra yes/no comparison records");
    c_syn->add_option("--out", syn.out, "Output JSON")->required();
    add_common(c_syn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*c_pre) return cmd_preprocess(pre, common);
        if (*c_reward) return cmd_train_reward(reward_args, common);
        if (*c_mtl) return cmd_train_mtl(mtl_args, common);
        if (*c_rl) return cmd_train_rl(rl_args, common);
        if (*c_gen) return cmd_generate(gen, common);
        if (*c_eval) return cmd_evaluate(ev, common);
        if (*c_syn) return cmd_make_synthetic(syn, common);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const CorpusError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
