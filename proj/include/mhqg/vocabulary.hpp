#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace mhqg {

/// Token ↔ id map shared by encoder and decoder. Ids 0..3 are reserved.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kSos = 2;
    static constexpr int kEos = 3;
    static constexpr int kReservedCount = 4;

    Vocabulary();
    /// `ranked` holds the non-reserved tokens in id order; duplicates are rejected.
    explicit Vocabulary(const std::vector<std::string>& ranked);

    int id(const std::string& token) const;
    bool contains(const std::string& token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return tokens_.size(); }
    /// All tokens in id order, reserved first.
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// Hex SHA-256 over the id-ordered token list.
    std::string fingerprint() const;

    /// One token per line in id order (reserved tokens included).
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

}  // namespace mhqg
