#include "morfo/vectors.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "morfo/errors.hpp"
#include "morfo/features.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

namespace {

double parse_double(const std::string& s, std::size_t lineno) {
  double out;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw data_error("line " + std::to_string(lineno) +
                     ": non-numeric component '" + s + "'");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

VectorTable load_vec_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty .vec file " + path);
  auto header = split_ws(line);
  if (header.size() != 2)
    throw data_error("line 1: expected header '<count> <dim>'");
  std::size_t count = 0, dim = 0;
  try {
    count = std::stoull(header[0]);
    dim = std::stoull(header[1]);
  } catch (const std::exception&) {
    throw data_error("line 1: non-numeric header");
  }
  if (dim == 0) throw data_error("line 1: dim must be >= 1");
  VectorTable table;
  table.dim = dim;
  std::size_t lineno = 1;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw data_error("line " + std::to_string(lineno + 1) +
                       ": unexpected end of file (" + std::to_string(count) +
                       " entries declared)");
    ++lineno;
    auto fields = split_ws(line);
    if (fields.size() != dim + 1)
      throw data_error("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(dim) + " components, got " +
                       std::to_string(fields.size() ? fields.size() - 1 : 0));
    if (fields[0].empty())
      throw data_error("line " + std::to_string(lineno) + ": empty token");
    std::vector<double> vec(dim);
    for (std::size_t d = 0; d < dim; ++d)
      vec[d] = parse_double(fields[d + 1], lineno);
    if (!table.entries.emplace(fields[0], vec).second) {
      std::cerr << "warning: duplicate token '" << fields[0] << "' at line "
                << lineno << ", overwriting\n";
      table.entries[fields[0]] = std::move(vec);
    }
  }
  return table;
}

void write_vec_text(const VectorTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  // Sorted for deterministic output.
  std::vector<const std::string*> tokens;
  tokens.reserve(table.entries.size());
  for (const auto& [tok, _] : table.entries) tokens.push_back(&tok);
  std::sort(tokens.begin(), tokens.end(),
            [](const auto* a, const auto* b) { return *a < *b; });
  out << table.entries.size() << ' ' << table.dim << '\n';
  for (const auto* tok : tokens) {
    out << *tok;
    for (double v : table.entries.at(*tok)) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw data_error("I/O failure writing " + path);
}

std::vector<std::string> char_ngrams(const std::string& word, std::size_t min_n,
                                     std::size_t max_n) {
  if (word.empty()) throw data_error("char_ngrams: empty word");
  if (min_n < 1 || min_n > max_n)
    throw config_error("char_ngrams: need 1 <= min_n <= max_n");
  std::vector<char32_t> cps;
  cps.push_back(U'<');
  for (char32_t cp : utf8::decode(word)) cps.push_back(cp);
  cps.push_back(U'>');
  std::vector<std::string> out;
  for (std::size_t start = 0; start < cps.size(); ++start) {
    for (std::size_t n = min_n; n <= max_n && start + n <= cps.size(); ++n) {
      std::string g;
      for (std::size_t k = 0; k < n; ++k) utf8::append(g, cps[start + k]);
      out.push_back(std::move(g));
    }
  }
  return out;
}

SubwordTable induce_subword_table(const VectorTable& table,
                                  std::size_t bucket_count,
                                  std::uint64_t seed) {
  if (bucket_count < 1)
    throw config_error("induce_subword_table: bucket_count must be >= 1");
  SubwordTable sub;
  sub.dim = table.dim;
  sub.bucket_count = bucket_count;
  sub.seed = seed;
  sub.buckets.assign(bucket_count, {});
  sub.counts.assign(bucket_count, 0);
  // Fixed word order so floating-point accumulation is reproducible.
  std::vector<const std::string*> words;
  words.reserve(table.entries.size());
  for (const auto& [tok, _] : table.entries) words.push_back(&tok);
  std::sort(words.begin(), words.end(),
            [](const auto* a, const auto* b) { return *a < *b; });
  for (const auto* word : words) {
    const auto& vec = table.entries.at(*word);
    for (const std::string& g : char_ngrams(*word, sub.min_n, sub.max_n)) {
      const std::size_t b = hash_row(g, bucket_count, seed);
      if (sub.buckets[b].empty()) sub.buckets[b].assign(sub.dim, 0.0);
      for (std::size_t d = 0; d < sub.dim; ++d) sub.buckets[b][d] += vec[d];
      ++sub.counts[b];
    }
  }
  for (std::size_t b = 0; b < bucket_count; ++b)
    if (sub.counts[b] > 0)
      for (double& v : sub.buckets[b]) v /= static_cast<double>(sub.counts[b]);
  return sub;
}

SynthResult synthesize_oov_vector(const std::string& word,
                                  const SubwordTable& sub) {
  SynthResult res;
  res.vector.assign(sub.dim, 0.0);
  for (const std::string& g : char_ngrams(word, sub.min_n, sub.max_n)) {
    const std::size_t b = hash_row(g, sub.bucket_count, sub.seed);
    if (sub.counts[b] == 0) continue;
    for (std::size_t d = 0; d < sub.dim; ++d) res.vector[d] += sub.buckets[b][d];
    ++res.covered;
  }
  if (res.covered > 0)
    for (double& v : res.vector) v /= static_cast<double>(res.covered);
  return res;
}

VectorTable backfill_table(const VectorTable& table,
                           const std::vector<std::string>& oov_words,
                           BackfillMode mode, std::size_t bucket_count,
                           std::uint64_t seed) {
  SubwordTable sub = induce_subword_table(table, bucket_count, seed);
  VectorTable out;
  out.dim = table.dim;
  if (mode == BackfillMode::kOovOnly) {
    out.entries = table.entries;
    for (const std::string& w : oov_words) {
      if (out.entries.count(w)) continue;
      SynthResult res = synthesize_oov_vector(w, sub);
      if (res.covered > 0) out.entries.emplace(w, std::move(res.vector));
    }
  } else {
    for (const auto& [w, _] : table.entries)
      out.entries[w] = synthesize_oov_vector(w, sub).vector;
    for (const std::string& w : oov_words)
      if (!out.entries.count(w))
        out.entries[w] = synthesize_oov_vector(w, sub).vector;
  }
  return out;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, T v) {
  // Little-endian on every target this builds for.
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error("truncated file reading " + what);
  return v;
}

}  // namespace

void save_subword_table(const SubwordTable& sub, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out.write("MSUB", 4);
  write_pod<std::uint32_t>(out, 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sub.dim));
  write_pod<std::uint64_t>(out, sub.bucket_count);
  write_pod<std::uint32_t>(out, sub.min_n);
  write_pod<std::uint32_t>(out, sub.max_n);
  write_pod<std::uint64_t>(out, sub.seed);
  for (std::uint64_t c : sub.counts)
    write_pod<double>(out, static_cast<double>(c));
  std::vector<double> zeros(sub.dim, 0.0);
  for (std::size_t b = 0; b < sub.bucket_count; ++b) {
    const auto& vec = sub.buckets[b].empty() ? zeros : sub.buckets[b];
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(sub.dim * sizeof(double)));
  }
  if (!out) throw data_error("I/O failure writing " + path);
}

SubwordTable load_subword_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MSUB", 4) != 0)
    throw data_error("bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != 1)
    throw data_error("unsupported version " + std::to_string(version));
  SubwordTable sub;
  sub.dim = read_pod<std::uint32_t>(in, "dim");
  sub.bucket_count = read_pod<std::uint64_t>(in, "bucket count");
  sub.min_n = read_pod<std::uint32_t>(in, "min_n");
  sub.max_n = read_pod<std::uint32_t>(in, "max_n");
  sub.seed = read_pod<std::uint64_t>(in, "seed");
  sub.counts.resize(sub.bucket_count);
  for (auto& c : sub.counts)
    c = static_cast<std::uint64_t>(read_pod<double>(in, "counts"));
  sub.buckets.assign(sub.bucket_count, {});
  std::vector<double> vec(sub.dim);
  for (std::size_t b = 0; b < sub.bucket_count; ++b) {
    in.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(sub.dim * sizeof(double)));
    if (!in) throw data_error("truncated file reading buckets");
    if (sub.counts[b] > 0) sub.buckets[b] = vec;
  }
  return sub;
}

}  // namespace morfo
