// Prints one PASS/FAIL line per acceptance criterion. Arguments restrict the
// run to the listed criterion numbers.

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mhqg/config.hpp"
#include "mhqg/metrics.hpp"
#include "mhqg/nn/ops.hpp"
#include "mhqg/reward_model.hpp"
#include "mhqg/synthetic.hpp"
#include "mhqg/text_scores.hpp"
#include "mhqg/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace mhqg;
using namespace mhqg::nn;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "mhqg_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TrainingConfig synthetic_config() {
    return TrainingConfig::load(fs::path(MHQG_SOURCE_DIR) / "configs" / "synthetic.json");
}

// Random generator and source for the structural checks.
struct Fixture {
    int vocab = 0;
    std::unique_ptr<Generator> model;
    EncodedExample example;
};

Fixture random_fixture(std::mt19937_64& rng, std::uint64_t seed) {
    Fixture f;
    f.vocab = std::uniform_int_distribution<int>(8, 20)(rng);
    auto config = testsupport::tiny_generator_config(f.vocab);
    config.encoder_hidden = std::uniform_int_distribution<int>(2, 4)(rng);
    config.decoder_hidden = std::uniform_int_distribution<int>(2, 4)(rng);
    f.model = std::make_unique<Generator>(config, seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto* p : f.model->parameters().all()) {
        for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += noise(rng);
    }
    std::vector<int> lengths;
    const int sentences = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int s = 0; s < sentences; ++s) lengths.push_back(std::uniform_int_distribution<int>(2, 5)(rng));
    f.example = testsupport::random_encoded(rng, f.vocab, lengths, std::uniform_int_distribution<int>(0, 3)(rng));
    return f;
}

// Steps the decoder along random previous tokens, handing each step to `visit`.
void walk_decoder(const Fixture& f, std::mt19937_64& rng, int steps,
                  const std::function<void(const DecoderStep&, const SourceEncoding&)>& visit) {
    Graph g(false);
    auto src = f.model->encode(g, f.example);
    std::uniform_int_distribution<int> token(0, static_cast<int>(src.decoder.extended_size) - 1);
    LstmState state = src.decoder.initial;
    int prev = Vocabulary::kSos;
    for (int t = 0; t < steps; ++t) {
        auto step = f.model->decoder().step(g, src.decoder, state, prev);
        visit(step, src);
        state = step.state;
        prev = token(rng);
    }
}

// ------------------------------------------------------------------ criteria

Outcome distributions() {
    std::mt19937_64 rng(101);
    double worst_sum = 0.0, most_negative = 0.0;
    std::size_t steps = 0;
    for (int i = 0; i < 200; ++i) {
        auto f = random_fixture(rng, 1000 + static_cast<std::uint64_t>(i));
        walk_decoder(f, rng, 4, [&](const DecoderStep& s, const SourceEncoding&) {
            for (const Matrix* m : {&s.final_dist.value(), &s.attention.value(), &s.vocab_dist.value()}) {
                worst_sum = std::max(worst_sum, std::abs(m->sum() - 1.0));
                most_negative = std::min(most_negative, m->minCoeff());
            }
            ++steps;
        });
    }
    return {worst_sum <= 1e-6 && most_negative >= 0.0,
            std::to_string(steps) + " steps over 200 fixtures, max |sum-1| " + fmt(worst_sum) + ", min entry " +
                fmt(most_negative)};
}

Outcome copy_oracle() {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto f = random_fixture(rng, 2000 + static_cast<std::uint64_t>(i));
        walk_decoder(f, rng, 3, [&](const DecoderStep& s, const SourceEncoding& src) {
            const Matrix& fin = s.final_dist.value();
            const Matrix& voc = s.vocab_dist.value();
            const Matrix& att = s.attention.value();
            const double gen = s.gen_prob.scalar();
            for (Index w = 0; w < fin.rows(); ++w) {
                double positional = 0.0;
                for (std::size_t p = 0; p < src.decoder.extended_ids.size(); ++p) {
                    if (src.decoder.extended_ids[p] == w) positional += att(static_cast<Index>(p));
                }
                const double p_copy = fin(w) - gen * (w < voc.rows() ? voc(w) : 0.0);
                worst = std::max(worst, std::abs(p_copy - (1.0 - gen) * positional));
            }
        });
    }
    return {worst <= 1e-9, "100 fixtures, max |P_copy - brute force| " + fmt(worst)};
}

Outcome gradient_suite() {
    const int V = 16;
    Generator model(testsupport::tiny_generator_config(V), 31);
    for (auto* p : model.parameters().all()) p->value *= 1.5;
    // Keep SF probabilities clear of the hard threshold so perturbations cannot flip the tags.
    model.sf_head().bias().value.setConstant(3.0);
    std::mt19937_64 rng(32);
    auto ex = testsupport::random_encoded(rng, V, {3, 3});

    std::vector<int> sampled;
    {
        Rng sample_rng(33);
        Graph g(false);
        auto src = model.encode(g, ex);
        auto s = model.sample(g, src, 5, sample_rng);
        sampled = s.result.tokens;
        if (s.result.finished) sampled.push_back(Vocabulary::kEos);
    }
    RewardHistory history(10);
    history.push(0.7, 0.5);
    history.push(0.4, 0.6);

    using Loss = std::function<Expr(Graph&)>;
    const std::pair<const char*, std::pair<Loss, double>> losses[] = {
        {"ml",
         {[&](Graph& g) {
              auto src = model.encode(g, ex);
              return model.sequence_nll(model.teacher_force(g, src, ex.target_ids), ex.target_ids);
          },
          1e-4}},
        {"sp",
         {[&](Graph& g) {
              auto src = model.encode(g, ex);
              return model.sf_loss(src, ex);
          },
          1e-4}},
        {"rl",
         {[&](Graph& g) {
              auto src = model.encode(g, ex);
              Expr log_prob = scale(model.sequence_nll(model.teacher_force(g, src, sampled), sampled), -1.0);
              return adaptive_scst_loss(0.9, 0.45, log_prob, history, 0.9);
          },
          1e-3}},
    };
    bool pass = true;
    std::string detail;
    for (const auto& [name, check] : losses) {
        auto report = testsupport::check_gradients(model.parameters(), check.first);
        const bool ok = report.worst() < check.second && report.tensors.size() == model.parameters().size();
        pass = pass && ok;
        detail += std::string(detail.empty() ? "" : "; ") + name + " worst " + fmt(report.worst()) + " (" +
                  report.worst_name() + ") over " + std::to_string(report.tensors.size()) + " tensors";
    }
    return {pass, detail};
}

Outcome scst_algebra() {
    double worst_a = 0.0, worst_b = 0.0;
    for (double c : {0.3, 1.0, 1.7}) {
        for (double alpha : {0.5, 0.9}) {
            RewardHistory h(50);
            for (int i = 0; i < 20; ++i) h.push(c, c);
            for (double R : {-10.0, -2.5}) {
                worst_a = std::max(worst_a, std::abs(adaptive_scst_loss(c, c, R, h, alpha) - (-(1.0 - alpha) * c * R)));
            }
        }
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        RewardHistory h(50);
        const double s = u(rng) + 0.1;
        h.push(s, s);
        const double r_s = u(rng), r_g = u(rng), R = -u(rng) * 10.0;
        worst_b = std::max(worst_b, std::abs(adaptive_scst_loss(r_s, r_g, R, h, 1.0) - (-(r_s - r_g) * R)));
    }
    RewardHistory worked(10);
    worked.push(2.0, 2.5);
    worked.push(2.0, 2.5);
    const double c = adaptive_scst_loss(0.8, 0.5, -10.0, worked, 0.9);
    const bool pass = worst_a < 1e-12 && worst_b < 1e-12 && std::abs(c - 4.4) <= 1e-9;
    return {pass, "(a) max err " + fmt(worst_a) + ", (b) max err " + fmt(worst_b) + ", (c) loss " + fmt(c)};
}

// Shared between the overfit, RL and metric criteria.
struct SyntheticRun {
    testsupport::SyntheticCorpus corpus = testsupport::synthetic_corpus(20, 1);
    std::vector<QAExample> examples() const {
        std::vector<QAExample> out;
        for (const auto& p : corpus.examples) out.push_back(p.example);
        return out;
    }
};

SyntheticRun& synthetic() {
    static SyntheticRun run;
    return run;
}

Outcome overfit() {
    auto& run = synthetic();
    auto config = synthetic_config();
    config.mtl_steps = std::min(config.mtl_steps, 2000);
    TrainOptions opts;
    opts.run_dir = scratch("overfit");
    const auto start = std::chrono::steady_clock::now();
    train_mtl(config, run.corpus.vocab, run.corpus.examples, {}, opts);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    auto ck = load_checkpoint(opts.run_dir / "latest.ckpt");
    auto stats = evaluate_teacher_forced(*ck.model, run.corpus.examples);
    const bool pass = stats.token_accuracy > 0.9 && stats.sf_f1 == 1.0 && minutes < 15.0;
    return {pass, std::to_string(config.mtl_steps) + " steps: token accuracy " + fmt(stats.token_accuracy) +
                      ", SF F1 " + fmt(stats.sf_f1) + ", " + fmt(minutes) + " min"};
}

std::unique_ptr<RewardModel>& synthetic_reward_model() {
    static std::unique_ptr<RewardModel> model;
    if (!model) {
        auto config = synthetic_config();
        RewardTrainOptions opts;
        opts.learning_rate = config.reward_lr;
        opts.steps = config.reward_steps;
        opts.batch_size = config.reward_batch_size;
        opts.eval_every = config.reward_eval_every;
        opts.min_first_epoch_f1 = config.reward_min_first_epoch_f1;
        opts.seed = config.seed;
        auto examples = synthetic().examples();
        model = train_reward_model(config.reward_model(), examples, examples, opts).model;
    }
    return model;
}

Outcome rl_smoke() {
    auto& run = synthetic();
    auto config = synthetic_config();
    // A partly trained phase-1 model, so sampled questions still have room to improve.
    config.mtl_steps = 200;
    TrainOptions mtl;
    mtl.run_dir = scratch("rl_init");
    train_mtl(config, run.corpus.vocab, run.corpus.examples, {}, mtl);

    config.rl_steps = 500;
    TrainOptions opts;
    opts.run_dir = scratch("rl_smoke");
    auto reward = make_reward_fn(*synthetic_reward_model(), config.reward_weights());
    auto outcome = train_rl(config, run.corpus.vocab, run.corpus.examples, {}, mtl.run_dir / "latest.ckpt", reward, opts);
    const auto& r = outcome.sampled_rewards;
    bool finite = outcome.losses.size() == 500;
    for (double l : outcome.losses) finite = finite && std::isfinite(l);
    if (r.size() < 200) return {false, "only " + std::to_string(r.size()) + " steps ran"};
    const double first = std::accumulate(r.begin(), r.begin() + 100, 0.0) / 100.0;
    const double last = std::accumulate(r.end() - 100, r.end(), 0.0) / 100.0;
    return {finite && last > first, std::to_string(outcome.losses.size()) + " steps, finite " +
                                        (finite ? "yes" : "no") + ", mean reward first 100 " + fmt(first) +
                                        ", last 100 " + fmt(last)};
}

Outcome metric_oracles() {
    const double rouge = rouge_l(tokenize("the cat sat"), tokenize("the cat on the mat"));
    auto examples = synthetic().examples();
    std::vector<Tokens> questions;
    for (const auto& ex : examples) questions.push_back(ex.question);
    const double bleu = corpus_bleu(questions, questions, 4)[3];
    const double rouge_self = corpus_rouge_l(questions, questions);
    const double coverage = sf_coverage(questions, examples, synthetic_reward_model().get());
    std::vector<double> system(examples.size());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (auto& v : system) v = u(rng);
    const double p = bootstrap_significance(system, system, 10000, 3);
    const bool pass = rouge == 0.5 && std::abs(bleu - 100.0) < 1e-9 && std::abs(rouge_self - 100.0) < 1e-9 &&
                      std::abs(coverage - 100.0) < 1e-9 && std::abs(p - 0.5) <= 0.02;
    return {pass, "ROUGE-L fixture " + fmt(rouge) + ", self BLEU-4 " + fmt(bleu) + ", self ROUGE-L " +
                      fmt(rouge_self) + ", gold SF coverage " + fmt(coverage) + ", identical-system p " + fmt(p)};
}

Outcome corpus_pipeline() {
    std::vector<QAExample> pool;
    std::string source;
    const char* train_path = std::getenv("MHQG_HOTPOT_TRAIN");
    const char* dev_path = std::getenv("MHQG_HOTPOT_DEV");
    if (train_path != nullptr && dev_path != nullptr) {
        source = "official files";
        for (const char* p : {train_path, dev_path}) {
            auto part = load_raw(p);
            pool.insert(pool.end(), part.begin(), part.end());
        }
    } else {
        source = "synthetic HotPotQA-format pool";
        SyntheticOptions opts;
        opts.count = 30000;
        opts.seed = 8;
        opts.comparison_fraction = 0.1;
        pool = parse_raw(make_synthetic_hotpot(opts));
    }
    auto filtered = filter_examples(std::move(pool));
    const auto& kept = filtered.examples;
    auto split = split_dataset(kept, 1);
    const double n = static_cast<double>(kept.size());
    const bool sizes_ok = std::abs(static_cast<double>(split.train.size()) - 0.8 * n) <= 1.0 &&
                          std::abs(static_cast<double>(split.dev.size()) - 0.1 * n) <= 1.0 &&
                          std::abs(static_cast<double>(split.test.size()) - 0.1 * n) <= 1.0;

    auto shares = [](const std::vector<QAExample>& xs) {
        std::map<Level, double> m;
        for (const auto& x : xs) m[x.level] += 1.0 / static_cast<double>(xs.size());
        return m;
    };
    auto pool_share = shares(kept);
    double worst_level = 0.0;
    for (const auto* part : {&split.train, &split.dev, &split.test}) {
        auto s = shares(*part);
        for (const auto& [level, share] : pool_share) worst_level = std::max(worst_level, std::abs(s[level] - share));
    }

    auto vocab = build_vocabulary(split.train, 50000);
    const std::size_t non_reserved = vocab.size() - Vocabulary::kReservedCount;

    std::mt19937_64 rng(9);
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t checked = 0, lossless = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(1000, order.size()); ++i) {
        const auto& ex = kept[order[i]];
        auto enc = encode_example(ex, vocab);
        Tokens flat;
        for (const auto& d : ex.documents) {
            auto t = d.flat_tokens();
            flat.insert(flat.end(), t.begin(), t.end());
        }
        ++checked;
        if (decode_extended(enc.extended_ids, vocab, enc.oov_list) == flat) ++lossless;
    }
    const bool pass = sizes_ok && worst_level <= 0.02 && non_reserved == 50000 && checked == 1000 && lossless == checked;
    return {pass, source + ": " + std::to_string(kept.size()) + " kept, split " + std::to_string(split.train.size()) +
                      "/" + std::to_string(split.dev.size()) + "/" + std::to_string(split.test.size()) +
                      ", worst level drift " + fmt(100.0 * worst_level) + "pp, vocabulary " +
                      std::to_string(non_reserved) + " (" + std::to_string(vocab.size()) + " with reserved), " +
                      std::to_string(lossless) + "/" + std::to_string(checked) + " lossless round trips"};
}

Outcome reductions() {
    std::mt19937_64 rng(303);
    std::size_t beam_equal = 0;
    double worst_mixed = 0.0, worst_forced = 0.0;
    for (int i = 0; i < 20; ++i) {
        auto f = random_fixture(rng, 3000 + static_cast<std::uint64_t>(i));
        {
            Graph g(false);
            auto src = f.model->encode(g, f.example);
            auto greedy = f.model->greedy(g, src, 8);
            auto beam = f.model->beam(g, src, 1, 8);
            if (greedy.tokens == beam.tokens) ++beam_equal;
        }
        // γ1 = 0: mixed loss equals γ2·(L_ml + (γ3/γ2)·L_sp), in value and gradient.
        const double g2 = 0.01, g3 = 0.1;
        auto grads = [&](bool mixed) {
            f.model->parameters().zero_grad();
            Graph g(false);
            auto src = f.model->encode(g, f.example);
            Expr ml = f.model->sequence_nll(f.model->teacher_force(g, src, f.example.target_ids), f.example.target_ids);
            Expr sp = f.model->sf_loss(src, f.example);
            Expr rl = scale(ml, 3.0);
            Expr loss;
            if (mixed) {
                Expr terms[] = {scale(rl, 0.0), scale(ml, g2), scale(sp, g3)};
                loss = sum(terms);
            } else {
                loss = scale(add(ml, scale(sp, g3 / g2)), g2);
            }
            g.backward(loss);
            std::vector<Matrix> out{loss.value()};
            for (const auto* p : f.model->parameters().all()) out.push_back(p->grad);
            return out;
        };
        auto a = grads(true), b = grads(false);
        for (std::size_t k = 0; k < a.size(); ++k) {
            worst_mixed = std::max(worst_mixed, (a[k] - b[k]).lpNorm<Eigen::Infinity>());
        }
        // P_gen = 1: the final distribution is the padded vocabulary distribution.
        Graph g(false);
        auto src = f.model->encode(g, f.example);
        auto step = f.model->decoder().step(g, src.decoder, src.decoder.initial, Vocabulary::kSos, 1.0);
        Matrix padded = Matrix::Zero(step.final_dist.value().rows(), 1);
        padded.topRows(step.vocab_dist.value().rows()) = step.vocab_dist.value();
        worst_forced = std::max(worst_forced, (step.final_dist.value() - padded).lpNorm<Eigen::Infinity>());
    }
    const bool pass = beam_equal == 20 && worst_mixed < 1e-12 && worst_forced < 1e-15;
    return {pass, "beam 1 = greedy on " + std::to_string(beam_equal) + "/20, gamma1=0 max diff " + fmt(worst_mixed) +
                      ", forced P_gen max diff " + fmt(worst_forced)};
}

// ------------------------------------------------------------------ CLI determinism

int run_shell(const std::string& dir, const std::string& args) {
    const std::string cmd = "cd '" + dir + "' && '" MHQG_CLI_PATH "' " + args + " > stdout.txt 2> stderr.txt";
    return std::system(cmd.c_str());
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root).string();
        std::ifstream in(entry.path(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        // Elapsed time is the one field allowed to differ between runs.
        if (rel.find("manifest.json") != std::string::npos) {
            auto j = json::parse(bytes);
            j.erase("wall_clock_seconds");
            bytes = j.dump();
        }
        out[rel] = bytes;
    }
    return out;
}

Outcome cli_determinism() {
    auto config = synthetic_config();
    config.mtl_steps = 40;
    config.rl_steps = 20;
    config.eval_every = 20;
    config.checkpoint_every = 20;
    config.reward_steps = 40;
    config.reward_eval_every = 20;
    config.dropout = 0.2;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"make-synthetic", "make-synthetic --count 30 --seed 5 --out raw.json"},
        {"preprocess", "preprocess --raw raw.json --out data --config config.json"},
        {"train-reward", "train-reward --data data --out reward --config config.json"},
        {"train-mtl", "train-mtl --data data --out mtl --config config.json"},
        {"train-rl", "train-rl --data data --out rl --config config.json --init mtl/best.ckpt --reward reward/reward.bin"},
        {"generate", "generate --checkpoint rl/best.ckpt --data data --split test --out gen.jsonl"},
        {"generate-beam1", "generate --checkpoint rl/best.ckpt --data data --split test --beam 1 --out gen1.jsonl"},
        {"evaluate",
         "evaluate --generations gen.jsonl --compare gen1.jsonl --data data --split test --reward reward/reward.bin "
         "--config config.json --out report.json"},
    };
    std::vector<std::map<std::string, std::string>> snaps;
    for (const char* name : {"cli_a", "cli_b"}) {
        auto dir = scratch(name);
        std::ofstream(dir / "config.json") << config.to_json().dump(2) << '\n';
        for (const auto& [label, args] : commands) {
            if (run_shell(dir.string(), args) != 0) {
                std::ifstream err(dir / "stderr.txt");
                std::string msg((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
                return {false, label + " failed: " + msg};
            }
        }
        snaps.push_back(snapshot(dir));
    }
    std::vector<std::string> differing;
    for (const auto& [path, bytes] : snaps[0]) {
        auto it = snaps[1].find(path);
        if (it == snaps[1].end() || it->second != bytes) differing.push_back(path);
    }
    if (snaps[0].size() != snaps[1].size()) differing.push_back("<file set>");
    return {differing.empty(), std::to_string(commands.size()) + " commands, " + std::to_string(snaps[0].size()) +
                                   " files compared" +
                                   (differing.empty() ? "" : ", differing: " + json(differing).dump())};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
        {"distribution sanity", distributions},  {"copy-mechanism oracle", copy_oracle},
        {"gradient suite", gradient_suite},      {"adaptive SCST algebra", scst_algebra},
        {"overfit checks", overfit},             {"end-to-end RL smoke", rl_smoke},
        {"metric oracles", metric_oracles},      {"corpus pipeline", corpus_pipeline},
        {"reduction equivalences", reductions},  {"CLI determinism", cli_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(number)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "[" << (o.pass ? "PASS" : "FAIL") << "] " << number << ". " << criteria[i].first << ": "
                  << o.detail << " [" << fmt(secs) << " s]" << std::endl;
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
