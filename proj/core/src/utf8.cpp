#include "morfo/utf8.hpp"

#include "morfo/errors.hpp"

namespace morfo::utf8 {

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t extra = 0;
    if (b < 0x80) {
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      extra = 1;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      extra = 3;
    } else {
      throw data_error("invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + extra >= s.size()) throw data_error("truncated UTF-8 sequence");
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80)
        throw data_error("invalid UTF-8 continuation at offset " +
                         std::to_string(i + k));
      cp = (cp << 6) | (c & 0x3F);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
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

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size() * 2);
  for (char32_t cp : cps) append(out, cp);
  return out;
}

char32_t to_lower(char32_t cp) {
  // ASCII
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 supplement (0xD7 is the multiplication sign)
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Greek: accented capitals
  switch (cp) {
    case 0x386: return 0x3AC;  // Ά -> ά
    case 0x388: return 0x3AD;  // Έ -> έ
    case 0x389: return 0x3AE;  // Ή -> ή
    case 0x38A: return 0x3AF;  // Ί -> ί
    case 0x38C: return 0x3CC;  // Ό -> ό
    case 0x38E: return 0x3CD;  // Ύ -> ύ
    case 0x38F: return 0x3CE;  // Ώ -> ώ
    case 0x3AA: return 0x3CA;  // Ϊ -> ϊ
    case 0x3AB: return 0x3CB;  // Ϋ -> ϋ
    default: break;
  }
  // Greek: plain capitals (0x3A2 is unassigned)
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  // Cyrillic
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool is_upper(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return true;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return true;
  switch (cp) {
    case 0x386: case 0x388: case 0x389: case 0x38A:
    case 0x38C: case 0x38E: case 0x38F: case 0x3AA: case 0x3AB:
      return true;
    default: break;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return true;
  if (cp >= 0x400 && cp <= 0x42F) return true;
  return false;
}

bool is_lower(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') return true;
  if (cp >= 0xDF && cp <= 0xFF && cp != 0xF7) return true;
  if (cp >= 0x3AC && cp <= 0x3CE) return true;  // ά..ώ incl. final sigma
  if (cp == 0x390 || cp == 0x3B0) return true;  // ΐ ΰ
  if (cp >= 0x430 && cp <= 0x45F) return true;
  return false;
}

bool is_letter(char32_t cp) { return is_upper(cp) || is_lower(cp); }

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

std::string lowercase(std::string_view s) {
  auto cps = decode(s);
  for (auto& cp : cps) cp = to_lower(cp);
  return encode(cps);
}

std::size_t length(std::string_view s) { return decode(s).size(); }

}  // namespace morfo::utf8
