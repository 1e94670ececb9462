#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace mmlatent {

/// Closed word-level vocabulary. Ids are dense in [0, size); the first six
/// ids are reserved specials. Unknown words map to UNK on encode, so
/// tokenization never fails.
///
/// Text normalization: lowercase, split on whitespace, then split trailing
/// `.`, `,`, `?`, `!` into their own tokens. `decode` re-attaches those
/// punctuation tokens, so encode/decode round-trips any text already in that
/// canonical form (the task templates are).
class Vocab {
  public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kSep = 3;
    static constexpr int kUnk = 4;
    static constexpr int kImgNone = 5;
    static constexpr int kNumSpecials = 6;

    /// Builds from a word list; specials are prepended automatically and must
    /// not appear in `words`. Duplicate words collapse to one id.
    static Vocab from_words(const std::vector<std::string>& words);

    int size() const { return static_cast<int>(tokens_.size()); }
    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;
    bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }

    /// [BOS, word ids..., EOS]; "" encodes to [BOS, EOS].
    std::vector<int> encode(const std::string& text) const;
    /// Inverse of encode for canonical text; specials are dropped.
    std::string decode(const std::vector<int>& ids) const;

    /// Normalization used by encode, exposed for metric code.
    static std::vector<std::string> split_words(const std::string& text);

    /// One token per line, line number = id (specials included).
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

  private:
    Vocab() = default;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

}  // namespace mmlatent
