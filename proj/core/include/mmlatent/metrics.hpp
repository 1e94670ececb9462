#pragma once

#include <string>
#include <vector>

namespace mmlatent {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// ROUGE-L over whitespace tokens of the lowercased strings:
/// P = LCS/|cand|, R = LCS/|ref|, F1 their harmonic mean (0 when both sides
/// are empty).
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

/// Exact-label match rate; lengths must agree.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& golds);

}  // namespace mmlatent
