#ifndef QREFORM_TEXT_CODEC_H_
#define QREFORM_TEXT_CODEC_H_

#include <string>
#include <string_view>
#include <vector>

namespace qreform {

// UTF-8 helpers. Invalid byte sequences throw DataError.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::size_t utf8_length(std::string_view text);

// Lowercases ASCII letters; other code points are left untouched.
std::string fold_case(std::string_view text);

// Ordered character inventory. Symbol i has id i; the four control ids follow
// the symbols: PAD, BOS, EOS, UNK.
class Alphabet {
 public:
  static constexpr std::size_t kStandardSize = 41;

  // 26 lowercase letters, 10 digits, then space - ' . &
  static Alphabet standard();
  // One character per line, exactly 41 lines.
  static Alphabet from_file(const std::string& path);

  explicit Alphabet(std::u32string symbols);

  int symbol_count() const { return static_cast<int>(symbols_.size()); }
  int vocab_size() const { return symbol_count() + 4; }
  int pad() const { return symbol_count(); }
  int bos() const { return symbol_count() + 1; }
  int eos() const { return symbol_count() + 2; }
  int unk() const { return symbol_count() + 3; }

  // Id of a (case-folded) code point, UNK when out of alphabet.
  int id_of(char32_t c) const;
  char32_t symbol(int id) const;
  const std::u32string& symbols() const { return symbols_; }

 private:
  std::u32string symbols_;
  std::vector<int> ascii_ids_;  // fast path for code points < 128
};

// Character ids of one query: no interior PAD, EOS only as the final id.
struct CharSequence {
  std::vector<int> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const CharSequence&, const CharSequence&) = default;
};

// Rendering of UNK in decoded text (U+FFFD).
inline constexpr char32_t kUnknownMarker = U'�';

CharSequence encode(const Alphabet& alphabet, std::string_view text);
std::string decode(const Alphabet& alphabet, const CharSequence& seq);
// encode(text) followed by EOS.
CharSequence encode_with_eos(const Alphabet& alphabet, std::string_view text);

struct PaddedBatch {
  int batch = 0;
  int max_len = 0;
  std::vector<int> ids;      // batch x max_len, row-major, PAD beyond length
  std::vector<double> mask;  // batch x max_len, 1 where t < length
  std::vector<int> lengths;

  int id(int b, int t) const { return ids[static_cast<std::size_t>(b * max_len + t)]; }
  double mask_at(int b, int t) const {
    return mask[static_cast<std::size_t>(b * max_len + t)];
  }
};

PaddedBatch pad_batch(const Alphabet& alphabet, const std::vector<CharSequence>& seqs);

}  // namespace qreform

#endif  // QREFORM_TEXT_CODEC_H_
