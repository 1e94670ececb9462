#include "mmlatent/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {

const char* kSpecialNames[Vocab::kNumSpecials] = {"<pad>", "<bos>", "<eos>",
                                                  "<sep>", "<unk>", "<imgnone>"};

bool is_split_punct(char c) { return c == '.' || c == ',' || c == '?' || c == '!'; }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Vocab Vocab::from_words(const std::vector<std::string>& words) {
    Vocab v;
    for (int i = 0; i < kNumSpecials; ++i) {
        v.tokens_.emplace_back(kSpecialNames[i]);
        v.ids_[v.tokens_.back()] = i;
    }
    for (const auto& w : words) {
        const std::string t = lower(w);
        if (t.empty()) continue;
        if (!v.ids_.count(t)) {
            v.ids_[t] = v.size();
            v.tokens_.push_back(t);
        }
    }
    return v;
}

int Vocab::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int tid) const {
    if (tid < 0 || tid >= size())
        throw ContractError("token id " + std::to_string(tid) + " outside vocab of " +
                            std::to_string(size()));
    return tokens_[static_cast<std::size_t>(tid)];
}

std::vector<std::string> Vocab::split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(lower(text));
    std::string piece;
    while (ss >> piece) {
        // peel trailing punctuation into separate tokens, preserving order
        std::vector<std::string> tail;
        while (!piece.empty() && is_split_punct(piece.back())) {
            tail.emplace_back(1, piece.back());
            piece.pop_back();
        }
        if (!piece.empty()) out.push_back(piece);
        out.insert(out.end(), tail.rbegin(), tail.rend());
    }
    return out;
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> ids{kBos};
    for (const auto& w : split_words(text)) ids.push_back(id(w));
    ids.push_back(kEos);
    return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int tid : ids) {
        if (is_special(tid)) continue;
        const std::string& t = token(tid);
        const bool punct = t.size() == 1 && is_split_punct(t[0]);
        if (!out.empty() && !punct) out += ' ';
        out += t;
    }
    return out;
}

void Vocab::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write vocab to " + path);
    for (const auto& t : tokens_) f << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read vocab from " + path);
    Vocab v;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        v.ids_[line] = v.size();
        v.tokens_.push_back(line);
    }
    if (v.size() < kNumSpecials) throw DataError("vocab file " + path + " is missing specials");
    for (int i = 0; i < kNumSpecials; ++i)
        if (v.tokens_[static_cast<std::size_t>(i)] != kSpecialNames[i])
            throw DataError("vocab file " + path + " has unexpected special at id " +
                            std::to_string(i));
    return v;
}

}  // namespace mmlatent
