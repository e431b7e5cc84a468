#include "mhqg/metrics.hpp"

#include "mhqg/reward_model.hpp"
#include "mhqg/text_scores.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sys/wait.h>
#include <unistd.h>

namespace mhqg {

using nlohmann::json;

namespace {

void require_aligned(const std::vector<Tokens>& h, const std::vector<Tokens>& r, const char* what) {
    if (h.size() != r.size()) throw std::invalid_argument(std::string(what) + ": hypotheses and references differ in count");
    if (h.empty()) throw std::invalid_argument(std::string(what) + ": empty corpus");
}

std::map<Tokens, std::size_t> ngrams(const Tokens& tokens, std::size_t n) {
    std::map<Tokens, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> corpus_bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int max_n) {
    require_aligned(hypotheses, references, "corpus_bleu");
    if (max_n < 1) throw std::invalid_argument("corpus_bleu: max_n must be positive");
    std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0), total(static_cast<std::size_t>(max_n), 0.0);
    double hyp_len = 0.0, ref_len = 0.0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        hyp_len += static_cast<double>(hypotheses[i].size());
        ref_len += static_cast<double>(references[i].size());
        for (int n = 1; n <= max_n; ++n) {
            auto h = ngrams(hypotheses[i], static_cast<std::size_t>(n));
            auto r = ngrams(references[i], static_cast<std::size_t>(n));
            for (const auto& [gram, count] : h) {
                total[static_cast<std::size_t>(n - 1)] += static_cast<double>(count);
                if (auto it = r.find(gram); it != r.end()) {
                    matched[static_cast<std::size_t>(n - 1)] += static_cast<double>(std::min(count, it->second));
                }
            }
        }
    }
    std::vector<double> scores;
    if (hyp_len == 0.0) return std::vector<double>(static_cast<std::size_t>(max_n), 0.0);
    const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    double log_sum = 0.0;
    bool zero = false;
    for (int n = 1; n <= max_n; ++n) {
        const auto k = static_cast<std::size_t>(n - 1);
        if (matched[k] == 0.0 || total[k] == 0.0) zero = true;
        if (!zero) log_sum += std::log(matched[k] / total[k]);
        scores.push_back(zero ? 0.0 : 100.0 * bp * std::exp(log_sum / n));
    }
    return scores;
}

double mean_sentence_bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    require_aligned(hypotheses, references, "mean_sentence_bleu");
    std::vector<double> s;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) s.push_back(100.0 * sentence_bleu(hypotheses[i], references[i]));
    return mean(s);
}

std::vector<double> rouge_l_scores(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    require_aligned(hypotheses, references, "rouge_l");
    std::vector<double> s;
    s.reserve(hypotheses.size());
    for (std::size_t i = 0; i < hypotheses.size(); ++i) s.push_back(100.0 * rouge_l(hypotheses[i], references[i]));
    return s;
}

double corpus_rouge_l(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    return mean(rouge_l_scores(hypotheses, references));
}

std::vector<double> sf_coverage_scores(const std::vector<Tokens>& questions, const std::vector<QAExample>& examples,
                                       const RewardModel* model) {
    if (model == nullptr) throw std::invalid_argument("sf_coverage: a reward model is required");
    if (questions.size() != examples.size()) throw std::invalid_argument("sf_coverage: questions and examples differ in count");
    if (questions.empty()) throw std::invalid_argument("sf_coverage: empty corpus");
    std::vector<double> s;
    s.reserve(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) s.push_back(100.0 * mer_reward(*model, questions[i], examples[i]));
    return s;
}

double sf_coverage(const std::vector<Tokens>& questions, const std::vector<QAExample>& examples, const RewardModel* model) {
    return mean(sf_coverage_scores(questions, examples, model));
}

double bootstrap_significance(const std::vector<double>& a, const std::vector<double>& b, std::size_t iterations,
                              std::uint64_t seed) {
    if (a.size() != b.size()) throw std::invalid_argument("bootstrap_significance: score lists differ in length");
    if (a.empty() || iterations == 0) throw std::invalid_argument("bootstrap_significance: nothing to resample");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
    double below = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        double total = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) total += diff[pick(rng)];
        if (total < 0.0) {
            below += 1.0;
        } else if (total == 0.0) {
            below += 0.5;
        }
    }
    return below / static_cast<double>(iterations);
}

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<Tokens>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << join_tokens(l) << '\n';
}

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

}  // namespace

MeteorResult meteor_adapter(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                            const std::filesystem::path& tool_path) {
    require_aligned(hypotheses, references, "meteor");
    MeteorResult result;
    std::error_code ec;
    if (tool_path.empty() || !std::filesystem::exists(tool_path, ec)) {
        result.message = "METEOR tool not found" + (tool_path.empty() ? std::string() : ": " + tool_path.string());
        return result;
    }
    const bool jar = tool_path.extension() == ".jar";
    if (jar && std::system("command -v java >/dev/null 2>&1") != 0) {
        result.message = "java runtime not found for " + tool_path.string();
        return result;
    }
    auto dir = std::filesystem::temp_directory_path() / ("mhqg_meteor_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    auto hyp = dir / "hyp.txt";
    auto ref = dir / "ref.txt";
    write_lines(hyp, hypotheses);
    write_lines(ref, references);
    std::string cmd = jar ? "java -Xmx2G -jar " + shell_quote(tool_path.string()) + " " + shell_quote(hyp.string()) +
                                " " + shell_quote(ref.string()) + " -l en -norm"
                          : shell_quote(tool_path.string()) + " " + shell_quote(hyp.string()) + " " +
                                shell_quote(ref.string());
    cmd += " 2>&1";
    std::string output;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("cannot launch METEOR tool " + tool_path.string());
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) output += buf.data();
    const int status = ::pclose(pipe);
    std::filesystem::remove_all(dir, ec);
    if (status != 0) {
        throw std::runtime_error("METEOR tool failed (status " + std::to_string(WEXITSTATUS(status)) + "):\n" + output);
    }
    static const std::regex final_score(R"(Final score:\s*([0-9.eE+-]+))");
    std::smatch m;
    if (!std::regex_search(output, m, final_score)) {
        throw std::runtime_error("METEOR output has no final score:\n" + output);
    }
    result.available = true;
    result.score = 100.0 * std::stod(m[1].str());
    return result;
}

json evaluation_report(const EvaluationInput& input, const RewardModel* reward_model,
                       const std::optional<std::filesystem::path>& meteor_tool) {
    auto bleu = corpus_bleu(input.hypotheses, input.references, 4);
    auto rouge = rouge_l_scores(input.hypotheses, input.references);
    json report;
    report["count"] = input.hypotheses.size();
    json metrics;
    for (int n = 1; n <= 4; ++n) metrics["bleu_" + std::to_string(n)] = bleu[static_cast<std::size_t>(n - 1)];
    metrics["rouge_l"] = mean(rouge);
    metrics["sentence_bleu_4"] = mean_sentence_bleu(input.hypotheses, input.references);
    json per_example;
    per_example["id"] = input.ids;
    per_example["rouge_l"] = rouge;
    std::vector<double> sentence_bleu_scores;
    for (std::size_t i = 0; i < input.hypotheses.size(); ++i) {
        sentence_bleu_scores.push_back(100.0 * sentence_bleu(input.hypotheses[i], input.references[i]));
    }
    per_example["sentence_bleu_4"] = sentence_bleu_scores;
    if (reward_model != nullptr) {
        auto cov = sf_coverage_scores(input.hypotheses, input.examples, reward_model);
        metrics["sf_coverage"] = mean(cov);
        per_example["sf_coverage"] = cov;
    } else {
        report["warnings"].push_back("no reward checkpoint supplied; SF coverage omitted");
    }
    if (meteor_tool) {
        auto meteor = meteor_adapter(input.hypotheses, input.references, *meteor_tool);
        metrics["meteor"] = meteor.available ? json(meteor.score) : json("unavailable");
        if (!meteor.available) report["warnings"].push_back(meteor.message);
    } else {
        metrics["meteor"] = "unavailable";
    }
    report["metrics"] = metrics;
    report["per_example"] = per_example;
    return report;
}

}  // namespace mhqg
