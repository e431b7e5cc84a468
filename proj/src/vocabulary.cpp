#include "mhqg/vocabulary.hpp"

#include "mhqg/hashing.hpp"

#include <fstream>
#include <stdexcept>

namespace mhqg {

namespace {

const std::vector<std::string>& reserved_tokens() {
    static const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<s>", "</s>"};
    return kReserved;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& ranked) {
    tokens_ = reserved_tokens();
    tokens_.insert(tokens_.end(), ranked.begin(), ranked.end());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
        }
    }
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::fingerprint() const {
    std::string joined;
    for (const auto& t : tokens_) {
        joined += t;
        joined += '\n';
    }
    return sha256_hex(joined);
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write vocabulary file " + path.string());
    }
    for (const auto& t : tokens_) {
        out << t << '\n';
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read vocabulary file " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    const auto& reserved = reserved_tokens();
    if (lines.size() < reserved.size()) {
        throw std::runtime_error("vocabulary file " + path.string() + " lacks the reserved tokens");
    }
    for (std::size_t i = 0; i < reserved.size(); ++i) {
        if (lines[i] != reserved[i]) {
            throw std::runtime_error("vocabulary file " + path.string() + " has unexpected reserved token at line " +
                                     std::to_string(i + 1));
        }
    }
    return Vocabulary(std::vector<std::string>(lines.begin() + static_cast<std::ptrdiff_t>(reserved.size()), lines.end()));
}

}  // namespace mhqg
