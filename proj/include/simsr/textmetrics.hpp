#pragma once

// Tokenization and n-gram overlap metrics: the term-level F1 used as the
// simulation similarity, ROUGE-n F1, the 1/2/3-gram weighted ensemble and
// Self-ROUGE.

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simsr {

using TokenSequence = std::vector<std::string>;

namespace detail {

inline bool is_token_byte(unsigned char c) {
  // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept inside
  // tokens; only ASCII letters and digits are word characters otherwise.
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

/// Byte span [begin, end) of one token inside the source text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Locates token boundaries: maximal runs of ASCII alphanumerics or non-ASCII
/// bytes. Everything else is a separator.
inline std::vector<TokenSpan> token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           !detail::is_token_byte(static_cast<unsigned char>(text[i])))
      ++i;
    if (i == text.size()) break;
    std::size_t start = i;
    while (i < text.size() &&
           detail::is_token_byte(static_cast<unsigned char>(text[i])))
      ++i;
    spans.push_back({start, i});
  }
  return spans;
}

/// Lowercases ASCII and splits on every non-alphanumeric character.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  for (const auto& span : token_spans(text)) {
    std::string tok(text.substr(span.begin, span.end - span.begin));
    std::transform(tok.begin(), tok.end(), tok.begin(), detail::ascii_lower);
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

/// Keeps the suffix of `text` starting at its `max_tokens`-th last token.
/// Text with at most `max_tokens` tokens is returned unchanged.
inline std::string truncate_to_last_tokens(std::string_view text,
                                           std::size_t max_tokens) {
  auto spans = token_spans(text);
  if (spans.size() <= max_tokens) return std::string(text);
  if (max_tokens == 0) return {};
  return std::string(text.substr(spans[spans.size() - max_tokens].begin));
}

inline std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

/// F1 from a clipped overlap count and the two sequence lengths.
/// Zero overlap (including empty-vs-empty) scores 0.
inline double overlap_f1(std::size_t overlap, std::size_t pred_total,
                         std::size_t ref_total) {
  if (overlap == 0 || pred_total == 0 || ref_total == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / pred_total;
  const double recall = static_cast<double>(overlap) / ref_total;
  return 2.0 * precision * recall / (precision + recall);
}

/// Clipped multiset intersection size of two sorted ranges.
template <class It>
std::size_t sorted_overlap(It a, It a_end, It b, It b_end) {
  std::size_t n = 0;
  while (a != a_end && b != b_end) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++n;
      ++a;
      ++b;
    }
  }
  return n;
}

/// Unigram F1 over multiset overlap. Symmetric in its arguments.
inline double term_f1(const TokenSequence& a, const TokenSequence& b) {
  if (a.empty() || b.empty()) return 0.0;
  TokenSequence sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return overlap_f1(sorted_overlap(sa.begin(), sa.end(), sb.begin(), sb.end()),
                    a.size(), b.size());
}

/// Counts of contiguous n-grams. Empty when the sequence is shorter than n.
inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(
    const TokenSequence& tokens, std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + i,
                                       tokens.begin() + i + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

/// ROUGE-n F1:
///   overlap = sum over n-grams g of min(count_pred(g), count_ref(g))
///   P = overlap / #ngrams(pred), R = overlap / #ngrams(ref), F1 = 2PR/(P+R)
/// Either side shorter than n gives 0.
inline double rouge_n_f1(const TokenSequence& pred, const TokenSequence& ref,
                         std::size_t n) {
  if (n == 0 || pred.size() < n || ref.size() < n) return 0.0;
  const auto pc = ngram_counts(pred, n);
  const auto rc = ngram_counts(ref, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : pc) {
    if (auto it = rc.find(gram); it != rc.end())
      overlap += std::min(count, it->second);
  }
  return overlap_f1(overlap, pred.size() - n + 1, ref.size() - n + 1);
}

/// ROUGE-1/6 + ROUGE-2/3 + ROUGE-3/2.
inline double weighted_rouge(const TokenSequence& pred,
                             const TokenSequence& ref) {
  return rouge_n_f1(pred, ref, 1) / 6.0 + rouge_n_f1(pred, ref, 2) / 3.0 +
         rouge_n_f1(pred, ref, 3) / 2.0;
}

/// Mean over replies of the best weighted ROUGE against any other reply in
/// the set. Lower means more diverse.
inline double self_rouge(const std::vector<TokenSequence>& replies) {
  if (replies.size() < 2)
    throw std::invalid_argument("need at least two replies");
  double total = 0.0;
  for (std::size_t k = 0; k < replies.size(); ++k) {
    double best = 0.0;
    for (std::size_t j = 0; j < replies.size(); ++j) {
      if (j == k) continue;
      best = std::max(best, weighted_rouge(replies[k], replies[j]));
    }
    total += best;
  }
  return total / static_cast<double>(replies.size());
}

}  // namespace simsr
