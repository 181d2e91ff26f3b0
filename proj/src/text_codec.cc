#include "qreform/text_codec.h"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "qreform/errors.h"

namespace qreform {

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07;
      extra = 3;
    } else {
      throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + static_cast<std::size_t>(extra) >= text.size())
      throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
      if ((cont & 0xC0) != 0x80)
        throw DataError("invalid UTF-8 continuation byte at offset " +
                        std::to_string(i + static_cast<std::size_t>(k)));
      cp = (cp << 6) | (cont & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (char c : text)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

std::string fold_case(std::string_view text) {
  std::string out(text);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

Alphabet Alphabet::standard() {
  return Alphabet(U"abcdefghijklmnopqrstuvwxyz0123456789 -'.&");
}

Alphabet Alphabet::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alphabet file '" + path + "'");
  std::u32string symbols;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::u32string cps = utf8_decode(line);
    if (cps.size() != 1)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected exactly one character");
    symbols.push_back(cps[0]);
  }
  if (symbols.size() != kStandardSize)
    throw DataError(path + ": expected " + std::to_string(kStandardSize) +
                    " characters, found " + std::to_string(symbols.size()));
  return Alphabet(std::move(symbols));
}

Alphabet::Alphabet(std::u32string symbols) : symbols_(std::move(symbols)) {
  require(!symbols_.empty(), "alphabet must not be empty");
  std::unordered_set<char32_t> seen;
  ascii_ids_.assign(128, -1);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const char32_t c = symbols_[i];
    require(seen.insert(c).second, "alphabet symbols must be distinct");
    require(!(c >= U'A' && c <= U'Z'), "alphabet symbols must be case-folded");
    require(c != kUnknownMarker, "alphabet must not contain the UNK marker");
    if (c < 128) ascii_ids_[c] = static_cast<int>(i);
  }
}

int Alphabet::id_of(char32_t c) const {
  if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  if (c < 128) {
    const int id = ascii_ids_[c];
    return id >= 0 ? id : unk();
  }
  const auto pos = symbols_.find(c);
  return pos == std::u32string::npos ? unk() : static_cast<int>(pos);
}

char32_t Alphabet::symbol(int id) const {
  require(id >= 0 && id < symbol_count(), "symbol: id is not a character id");
  return symbols_[static_cast<std::size_t>(id)];
}

CharSequence encode(const Alphabet& alphabet, std::string_view text) {
  CharSequence seq;
  for (char32_t c : utf8_decode(text)) seq.ids.push_back(alphabet.id_of(c));
  return seq;
}

CharSequence encode_with_eos(const Alphabet& alphabet, std::string_view text) {
  CharSequence seq = encode(alphabet, text);
  seq.ids.push_back(alphabet.eos());
  return seq;
}

std::string decode(const Alphabet& alphabet, const CharSequence& seq) {
  std::u32string out;
  for (int id : seq.ids) {
    require(id >= 0 && id < alphabet.vocab_size(),
            "decode: id " + std::to_string(id) + " out of range");
    if (id < alphabet.symbol_count())
      out.push_back(alphabet.symbol(id));
    else if (id == alphabet.unk())
      out.push_back(kUnknownMarker);
  }
  return utf8_encode(out);
}

PaddedBatch pad_batch(const Alphabet& alphabet, const std::vector<CharSequence>& seqs) {
  require(!seqs.empty(), "pad_batch: empty batch");
  PaddedBatch batch;
  batch.batch = static_cast<int>(seqs.size());
  for (const auto& s : seqs)
    batch.max_len = std::max(batch.max_len, static_cast<int>(s.size()));
  const auto cells = static_cast<std::size_t>(batch.batch * batch.max_len);
  batch.ids.assign(cells, alphabet.pad());
  batch.mask.assign(cells, 0.0);
  for (int b = 0; b < batch.batch; ++b) {
    const auto& s = seqs[static_cast<std::size_t>(b)];
    batch.lengths.push_back(static_cast<int>(s.size()));
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto cell = static_cast<std::size_t>(b * batch.max_len) + t;
      batch.ids[cell] = s.ids[t];
      batch.mask[cell] = 1.0;
    }
  }
  return batch;
}

}  // namespace qreform
