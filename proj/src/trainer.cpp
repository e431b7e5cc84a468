#include "mhqg/trainer.hpp"

#include "mhqg/binary_io.hpp"
#include "mhqg/metrics.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace mhqg {

using namespace nn;
using nlohmann::json;

// ---------------------------------------------------------------- history

RewardHistory::RewardHistory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("RewardHistory: capacity must be positive");
}

void RewardHistory::push(double sampled, double greedy) {
    sampled_.push_back(sampled);
    greedy_.push_back(greedy);
    sampled_sum_ += sampled;
    greedy_sum_ += greedy;
    if (sampled_.size() > capacity_) {
        sampled_sum_ -= sampled_.front();
        greedy_sum_ -= greedy_.front();
        sampled_.pop_front();
        greedy_.pop_front();
    }
    // Re-add from scratch once per window so cancellation error cannot accumulate.
    if (++pushes_since_resum_ >= capacity_) resum();
}

void RewardHistory::resum() {
    sampled_sum_ = std::accumulate(sampled_.begin(), sampled_.end(), 0.0);
    greedy_sum_ = std::accumulate(greedy_.begin(), greedy_.end(), 0.0);
    pushes_since_resum_ = 0;
}

void RewardHistory::write(std::ostream& out) const {
    binary::write_u64(out, capacity_);
    binary::write_doubles(out, std::vector<double>(sampled_.begin(), sampled_.end()));
    binary::write_doubles(out, std::vector<double>(greedy_.begin(), greedy_.end()));
}

RewardHistory RewardHistory::read(std::istream& in) {
    RewardHistory h(binary::read_u64(in));
    auto s = binary::read_doubles(in);
    auto g = binary::read_doubles(in);
    if (s.size() != g.size() || s.size() > h.capacity_) throw binary::FormatError("inconsistent reward history");
    h.sampled_.assign(s.begin(), s.end());
    h.greedy_.assign(g.begin(), g.end());
    h.resum();
    return h;
}

// ---------------------------------------------------------------- losses

ScstAdvantage scst_advantage(double r_s, double r_g, double history_sampled_sum, double history_greedy_sum,
                             double alpha, bool use_history) {
    ScstAdvantage a;
    if (use_history && history_greedy_sum != 0.0) {
        a.adaptive = true;
        a.baseline = alpha * (history_sampled_sum / history_greedy_sum) * r_g;
    } else {
        a.baseline = r_g;
    }
    a.advantage = r_s - a.baseline;
    return a;
}

double adaptive_scst_loss(double r_s, double r_g, double log_prob, const RewardHistory& history, double alpha,
                          bool use_history) {
    auto a = scst_advantage(r_s, r_g, history.sampled_sum(), history.greedy_sum(), alpha,
                            use_history && !history.empty());
    return -a.advantage * log_prob;
}

Expr adaptive_scst_loss(double r_s, double r_g, Expr log_prob, const RewardHistory& history, double alpha,
                        bool use_history) {
    auto a = scst_advantage(r_s, r_g, history.sampled_sum(), history.greedy_sum(), alpha,
                            use_history && !history.empty());
    return scale(log_prob, -a.advantage);
}

double mtl_loss(double ml, double sp, double beta) { return ml + beta * sp; }

double mixed_loss(double rl, double ml, double sp, double gamma_rl, double gamma_ml, double gamma_sp) {
    return gamma_rl * rl + gamma_ml * ml + gamma_sp * sp;
}

std::set<SupportingFact> predicted_supporting_facts(const QAExample& example, const std::vector<int>& predictions) {
    auto addresses = sentence_addresses(example);
    if (addresses.size() != predictions.size()) {
        throw std::invalid_argument("predicted_supporting_facts: one prediction per sentence required");
    }
    std::set<SupportingFact> out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == 1) out.insert(addresses[i]);
    }
    return out;
}

ExampleTerms teacher_forced_terms(const Generator& model, Graph& g, const ProcessedExample& example) {
    ExampleTerms t;
    SourceEncoding src = model.encode(g, example.encoded);
    const auto& targets = example.encoded.target_ids;
    auto steps = model.teacher_force(g, src, targets);
    t.ml = model.sequence_nll(steps, targets);
    t.sp = model.sf_loss(src, example.encoded);
    t.tokens = targets.size();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        Index best = 0;
        steps[i].final_dist.value().col(0).maxCoeff(&best);
        if (best == targets[i]) ++t.correct_tokens;
    }
    t.sf_f1 = supporting_fact_f1(predicted_supporting_facts(example.example, src.sf_predictions),
                                 example.example.supporting_facts);
    return t;
}

BatchStats evaluate_teacher_forced(const Generator& model, const std::vector<ProcessedExample>& examples) {
    BatchStats s;
    if (examples.empty()) return s;
    std::size_t correct = 0, tokens = 0;
    for (const auto& ex : examples) {
        Graph g(false);
        auto t = teacher_forced_terms(model, g, ex);
        s.ml += t.ml.scalar();
        s.sp += t.sp.scalar();
        s.sf_f1 += t.sf_f1;
        correct += t.correct_tokens;
        tokens += t.tokens;
    }
    const auto n = static_cast<double>(examples.size());
    s.ml /= n;
    s.sp /= n;
    s.sf_f1 /= n;
    s.token_accuracy = tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(tokens);
    return s;
}

RewardFn make_reward_fn(const RewardModel& model, const RewardWeights& weights) {
    return [&model, weights](const Tokens& hypothesis, const ProcessedExample& example) {
        const double mer = weights.mer != 0.0 ? mer_reward(model, hypothesis, example.example) : 0.0;
        const double rouge = rouge_l(hypothesis, example.example.question);
        const double bleu = weights.bleu != 0.0 ? sentence_bleu(hypothesis, example.example.question) : 0.0;
        return combine_rewards(mer, rouge, bleu, weights);
    };
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr const char* kCheckpointMagic = "mhqg-generator";
constexpr std::uint64_t kCheckpointVersion = 1;

void copy_parameters(const ParameterStore& from, ParameterStore& to) {
    auto src = from.all();
    auto dst = to.all();
    if (src.size() != dst.size()) throw CheckpointError("checkpoint has a different parameter layout");
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i]->name != dst[i]->name || src[i]->value.rows() != dst[i]->value.rows() ||
            src[i]->value.cols() != dst[i]->value.cols()) {
            throw CheckpointError("checkpoint parameter " + src[i]->name + " does not match the configured model");
        }
        dst[i]->value = src[i]->value;
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const Generator& model,
                     const Adam* optimizer, const RewardHistory* history) {
    // Write-then-rename so an interruption never leaves a truncated checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
        binary::write_string(out, kCheckpointMagic);
        binary::write_u64(out, kCheckpointVersion);
        binary::write_string(out, meta.phase);
        binary::write_string(out, meta.config.dump());
        binary::write_string(out, meta.config_hash);
        binary::write_string(out, meta.vocab_fingerprint);
        binary::write_u64(out, meta.vocab_size);
        binary::write_u64(out, meta.step);
        binary::write_f64(out, meta.best_dev_bleu);
        binary::write_u64(out, meta.best_step);
        model.parameters().write(out);
        if (optimizer != nullptr) {
            std::ostringstream opt;
            optimizer->write(opt);
            binary::write_u64(out, 1);
            binary::write_string(out, opt.str());
        } else {
            binary::write_u64(out, 0);
        }
        if (history != nullptr) {
            binary::write_u64(out, 1);
            history->write(out);
        } else {
            binary::write_u64(out, 0);
        }
        if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    try {
        if (binary::read_string(in) != kCheckpointMagic) {
            throw CheckpointError(path.string() + " is not a generator checkpoint");
        }
        if (auto version = binary::read_u64(in); version != kCheckpointVersion) {
            throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
        }
        LoadedCheckpoint ck;
        ck.meta.phase = binary::read_string(in);
        ck.meta.config = json::parse(binary::read_string(in));
        ck.meta.config_hash = binary::read_string(in);
        ck.meta.vocab_fingerprint = binary::read_string(in);
        ck.meta.vocab_size = binary::read_u64(in);
        ck.meta.step = binary::read_u64(in);
        ck.meta.best_dev_bleu = binary::read_f64(in);
        ck.meta.best_step = binary::read_u64(in);
        auto config = TrainingConfig::from_json(ck.meta.config);
        ck.model = std::make_unique<Generator>(config.generator(static_cast<int>(ck.meta.vocab_size)), config.seed);
        ck.model->parameters().read(in);
        if (binary::read_u64(in) == 1) ck.optimizer_state = binary::read_string(in);
        if (binary::read_u64(in) == 1) ck.history = RewardHistory::read(in);
        return ck;
    } catch (const binary::FormatError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

void restore_optimizer(Adam& optimizer, const std::string& state) {
    if (state.empty()) throw CheckpointError("checkpoint carries no optimizer state");
    std::istringstream in(state);
    optimizer.read(in);
}

double dev_bleu(const Generator& model, const Vocabulary& vocab, const std::vector<ProcessedExample>& dev,
                int beam_width, int max_len, int max_examples) {
    std::vector<Tokens> hyps, refs;
    for (const auto& ex : dev) {
        if (max_examples > 0 && static_cast<int>(hyps.size()) >= max_examples) break;
        auto result = model.generate(ex.encoded, beam_width, max_len);
        hyps.push_back(decode_extended(result.tokens, vocab, ex.encoded.oov_list));
        refs.push_back(ex.example.question);
    }
    if (hyps.empty()) return 0.0;
    return corpus_bleu(hyps, refs, 4)[3];
}

// ---------------------------------------------------------------- training loop

namespace {

using Batch = std::vector<const ProcessedExample*>;
using StepFn = std::function<json(const Batch&, Rng&, std::uint64_t step)>;

std::seed_seq make_seed(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
    return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                         static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
}

class PhaseRunner {
public:
    PhaseRunner(const TrainingConfig& config, const Vocabulary& vocab, const std::vector<ProcessedExample>& train,
                const std::vector<ProcessedExample>& dev, const TrainOptions& options, std::string phase,
                Generator& model, double learning_rate, std::uint64_t total_steps, RewardHistory* history)
        : config_(config), vocab_(vocab), train_(train), dev_(dev), options_(options), phase_(std::move(phase)),
          model_(model), total_steps_(total_steps), history_(history),
          adam_(model.parameters(), AdamConfig{learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                                               config.clip}) {
        if (train.empty()) throw std::invalid_argument("training split is empty");
        stream_ = phase_ == "mtl" ? 1u : 2u;
        meta_.phase = phase_;
        meta_.config = config.to_json();
        meta_.config_hash = config.hash();
        meta_.vocab_fingerprint = vocab.fingerprint();
        meta_.vocab_size = vocab.size();
        std::filesystem::create_directories(options.run_dir);
        latest_ = options.run_dir / "latest.ckpt";
        best_ = options.run_dir / "best.ckpt";
        log_path_ = options.run_dir / "train_log.jsonl";
    }

    TrainOutcome run(const StepFn& step_fn) {
        std::uint64_t start = 0;
        if (options_.resume) {
            start = resume();
        } else {
            std::ofstream(log_path_, std::ios::trunc);
        }
        TrainOutcome outcome;
        outcome.latest_checkpoint = latest_;
        outcome.best_checkpoint = best_;
        std::uint64_t step = start;
        while (step < total_steps_) {
            ++step;
            auto seed = make_seed(config_.seed, stream_, step);
            Rng rng(seed);
            Batch batch = batch_for(step);
            json record = step_fn(batch, rng, step);
            const double loss = record.at("loss").get<double>();
            if (!std::isfinite(loss)) dump_divergence(step, batch, loss);
            adam_.step();
            outcome.losses.push_back(loss);
            if (record.contains("reward_sampled")) outcome.sampled_rewards.push_back(record["reward_sampled"].get<double>());

            if (step % static_cast<std::uint64_t>(config_.log_every) == 0 || step == total_steps_) {
                record["phase"] = phase_;
                record["step"] = step;
                record["grad_max_abs"] = adam_.last_max_abs_grad();
                write_log(record);
            }
            if (step % static_cast<std::uint64_t>(config_.eval_every) == 0 || step == total_steps_) evaluate(step);
            const bool stop_here = options_.stop_after && step == *options_.stop_after && step < total_steps_;
            if (step % static_cast<std::uint64_t>(config_.checkpoint_every) == 0 || step == total_steps_ || stop_here) {
                meta_.step = step;
                save_checkpoint(latest_, meta_, model_, &adam_, history_);
            }
            if (stop_here) {
                outcome.interrupted = true;
                break;
            }
        }
        if (!std::filesystem::exists(best_)) {
            meta_.step = step;
            save_checkpoint(best_, meta_, model_, nullptr, nullptr);
        }
        outcome.final_step = step;
        outcome.best_dev_bleu = meta_.best_dev_bleu;
        outcome.best_step = meta_.best_step;
        return outcome;
    }

private:
    std::uint64_t resume() {
        if (!std::filesystem::exists(latest_)) {
            throw CheckpointError("nothing to resume: no checkpoint at " + latest_.string());
        }
        auto ck = load_checkpoint(latest_);
        if (ck.meta.config_hash != meta_.config_hash) {
            throw CheckpointError("refusing to resume: checkpoint config hash " + ck.meta.config_hash +
                                  " differs from the current config " + meta_.config_hash);
        }
        if (ck.meta.phase != phase_) {
            throw CheckpointError("refusing to resume: checkpoint belongs to phase " + ck.meta.phase);
        }
        if (ck.meta.vocab_fingerprint != meta_.vocab_fingerprint) {
            throw CheckpointError("refusing to resume: vocabulary differs from the checkpoint");
        }
        copy_parameters(ck.model->parameters(), model_.parameters());
        restore_optimizer(adam_, ck.optimizer_state);
        if (history_ != nullptr) *history_ = ck.history;
        meta_.best_dev_bleu = ck.meta.best_dev_bleu;
        meta_.best_step = ck.meta.best_step;
        truncate_log(ck.meta.step);
        return ck.meta.step;
    }

    // Drop log records written after the checkpoint we resume from.
    void truncate_log(std::uint64_t step) {
        std::vector<std::string> kept;
        {
            std::ifstream in(log_path_);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto j = json::parse(line, nullptr, false);
                if (!j.is_discarded() && j.value("step", std::uint64_t{0}) <= step) kept.push_back(line);
            }
        }
        std::ofstream out(log_path_, std::ios::trunc);
        for (const auto& l : kept) out << l << '\n';
    }

    void write_log(const json& record) {
        std::ofstream out(log_path_, std::ios::app);
        out << record.dump() << '\n';
        if (options_.on_log) options_.on_log(record);
    }

    Batch batch_for(std::uint64_t step) {
        Batch batch;
        const auto n = static_cast<std::uint64_t>(train_.size());
        const auto bs = static_cast<std::uint64_t>(config_.batch_size);
        for (std::uint64_t i = 0; i < bs; ++i) {
            const std::uint64_t p = (step - 1) * bs + i;
            const std::uint64_t epoch = p / n;
            if (epoch != epoch_ || order_.empty()) {
                order_.resize(train_.size());
                std::iota(order_.begin(), order_.end(), 0);
                auto seed = make_seed(config_.seed, stream_ + 100, epoch);
                Rng rng(seed);
                std::shuffle(order_.begin(), order_.end(), rng);
                epoch_ = epoch;
            }
            batch.push_back(&train_[order_[p % n]]);
        }
        return batch;
    }

    void evaluate(std::uint64_t step) {
        const double bleu = dev_bleu(model_, vocab_, dev_, config_.beam_width, config_.max_decode_len,
                                     config_.eval_max_examples);
        json record{{"phase", phase_}, {"step", step}, {"dev_bleu_4", bleu}};
        if (bleu > meta_.best_dev_bleu) {
            meta_.best_dev_bleu = bleu;
            meta_.best_step = step;
            meta_.step = step;
            save_checkpoint(best_, meta_, model_, nullptr, nullptr);
            record["new_best"] = true;
        }
        write_log(record);
    }

    [[noreturn]] void dump_divergence(std::uint64_t step, const Batch& batch, double loss) {
        json dump{{"phase", phase_}, {"step", step}, {"loss", std::isnan(loss) ? "nan" : "inf"}};
        for (const auto* ex : batch) dump["batch_ids"].push_back(ex->example.id);
        for (const auto* p : model_.parameters().all()) {
            dump["parameter_norms"][p->name] = p->value.norm();
            dump["gradient_norms"][p->name] = p->grad.norm();
        }
        auto path = options_.run_dir / "divergence.json";
        std::ofstream(path) << dump.dump(2) << '\n';
        throw TrainingDiverged("non-finite loss at step " + std::to_string(step) + "; batch ids and parameter norms in " +
                               path.string());
    }

    const TrainingConfig& config_;
    const Vocabulary& vocab_;
    const std::vector<ProcessedExample>& train_;
    const std::vector<ProcessedExample>& dev_;
    const TrainOptions& options_;
    std::string phase_;
    Generator& model_;
    std::uint64_t total_steps_;
    RewardHistory* history_;
    Adam adam_;
    CheckpointMeta meta_;
    std::uint32_t stream_ = 1;
    std::filesystem::path latest_, best_, log_path_;
    std::vector<std::size_t> order_;
    std::uint64_t epoch_ = 0;
};

void check_vocab(const ProcessedExample& ex, const Vocabulary& vocab) {
    for (int id : ex.encoded.word_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
            throw std::invalid_argument("example " + ex.example.id + " was encoded with a different vocabulary");
        }
    }
}

}  // namespace

TrainOutcome train_mtl(const TrainingConfig& config, const Vocabulary& vocab, const std::vector<ProcessedExample>& train,
                       const std::vector<ProcessedExample>& dev, const TrainOptions& options) {
    for (const auto& ex : train) check_vocab(ex, vocab);
    Generator model(config.generator(static_cast<int>(vocab.size())), config.seed);
    if (!config.word_vectors.empty() && !options.resume) {
        const_cast<Encoder&>(model.encoder()).load_word_vectors(config.word_vectors, vocab);
    }
    PhaseRunner runner(config, vocab, train, dev, options, "mtl", model, config.lr_mtl,
                       static_cast<std::uint64_t>(config.mtl_steps), nullptr);
    const double inv_batch = 1.0 / config.batch_size;
    return runner.run([&](const Batch& batch, Rng& rng, std::uint64_t) {
        BatchStats s;
        std::size_t correct = 0, tokens = 0;
        for (const auto* ex : batch) {
            Graph g(true, &rng);
            auto t = teacher_forced_terms(model, g, *ex);
            Expr loss = scale(add(t.ml, scale(t.sp, config.beta_sp)), inv_batch);
            g.backward(loss);
            s.loss += loss.scalar();
            s.ml += t.ml.scalar() * inv_batch;
            s.sp += t.sp.scalar() * inv_batch;
            s.sf_f1 += t.sf_f1 * inv_batch;
            correct += t.correct_tokens;
            tokens += t.tokens;
        }
        s.token_accuracy = static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(tokens, 1));
        return json{{"loss", s.loss}, {"ml", s.ml}, {"sp", s.sp}, {"token_accuracy", s.token_accuracy},
                    {"sf_f1", s.sf_f1}};
    });
}

TrainOutcome train_rl(const TrainingConfig& config, const Vocabulary& vocab, const std::vector<ProcessedExample>& train,
                      const std::vector<ProcessedExample>& dev, const std::filesystem::path& init_checkpoint,
                      const RewardFn& reward, const TrainOptions& options) {
    for (const auto& ex : train) check_vocab(ex, vocab);
    Generator model(config.generator(static_cast<int>(vocab.size())), config.seed);
    {
        auto init = load_checkpoint(init_checkpoint);
        if (init.meta.vocab_fingerprint != vocab.fingerprint()) {
            throw CheckpointError("initial checkpoint " + init_checkpoint.string() + " uses a different vocabulary");
        }
        copy_parameters(init.model->parameters(), model.parameters());
    }
    RewardHistory history(static_cast<std::size_t>(config.history_size));
    PhaseRunner runner(config, vocab, train, dev, options, "rl", model, config.lr_rl,
                       static_cast<std::uint64_t>(config.rl_steps), &history);
    const double inv_batch = 1.0 / config.batch_size;
    return runner.run([&](const Batch& batch, Rng& rng, std::uint64_t step) {
        // The baseline uses the history as of the start of this batch.
        const double hist_s = history.sampled_sum();
        const double hist_g = history.greedy_sum();
        const bool adaptive = step > static_cast<std::uint64_t>(config.scst_warmup_steps) && !history.empty();
        std::vector<std::pair<double, double>> rewards;
        double loss_total = 0.0, rl = 0.0, ml = 0.0, sp = 0.0, r_s_mean = 0.0, r_g_mean = 0.0, mer = 0.0,
               rouge = 0.0, baseline = 0.0;
        for (const auto* ex : batch) {
            Graph g(true, &rng);
            SourceEncoding src = model.encode(g, ex->encoded);
            SampledSequence sampled = model.sample(g, src, config.max_decode_len, rng);
            SearchResult greedy = model.greedy(g, src, config.max_decode_len);
            const auto r_s = reward(decode_extended(sampled.result.tokens, vocab, ex->encoded.oov_list), *ex);
            const auto r_g = reward(decode_extended(greedy.tokens, vocab, ex->encoded.oov_list), *ex);
            const auto adv = scst_advantage(r_s.combined, r_g.combined, hist_s, hist_g, config.alpha_history, adaptive);

            Expr l_rl = scale(sampled.log_prob, -adv.advantage);
            const auto& targets = ex->encoded.target_ids;
            auto steps = model.teacher_force(g, src, targets);
            Expr l_ml = model.sequence_nll(steps, targets);
            Expr l_sp = model.sf_loss(src, ex->encoded);
            Expr terms[] = {scale(l_rl, config.gamma_rl), scale(l_ml, config.gamma_ml), scale(l_sp, config.gamma_sp)};
            Expr loss = scale(sum(terms), inv_batch);
            g.backward(loss);

            loss_total += loss.scalar();
            rl += l_rl.scalar() * inv_batch;
            ml += l_ml.scalar() * inv_batch;
            sp += l_sp.scalar() * inv_batch;
            r_s_mean += r_s.combined * inv_batch;
            r_g_mean += r_g.combined * inv_batch;
            mer += r_s.mer * inv_batch;
            rouge += r_s.rouge_l * inv_batch;
            baseline += adv.baseline * inv_batch;
            rewards.emplace_back(r_s.combined, r_g.combined);
        }
        for (const auto& [s, gr] : rewards) history.push(s, gr);
        return json{{"loss", loss_total}, {"rl", rl}, {"ml", ml}, {"sp", sp}, {"reward_sampled", r_s_mean},
                    {"reward_greedy", r_g_mean}, {"mer_sampled", mer}, {"rouge_l_sampled", rouge},
                    {"baseline", baseline}, {"adaptive_baseline", adaptive}};
    });
}

}  // namespace mhqg
