#include "geoprop/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace geoprop::text {
namespace {

bool is_word_codepoint(UChar32 c) { return u_isalnum(c) || c == '_'; }

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

icu::UnicodeString from_utf8(std::string_view utf8) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
}

// Code point ending right before byte offset `pos`, or -1 at the start.
UChar32 codepoint_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return -1;
  auto i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_PREV(reinterpret_cast<const uint8_t*>(s.data()), 0, i, c);
  return c;
}

UChar32 codepoint_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return -1;
  auto i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, static_cast<int32_t>(s.size()), c);
  return c;
}

}  // namespace

std::string casefold(std::string_view utf8) {
  auto s = from_utf8(utf8);
  s.foldCase(U_FOLD_CASE_DEFAULT);
  return to_utf8(s);
}

std::string normalize_for_dedup(std::string_view utf8) {
  auto folded = from_utf8(utf8);
  folded.foldCase(U_FOLD_CASE_DEFAULT);

  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < folded.length();) {
    const UChar32 c = folded.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (pending_space) out.append(static_cast<UChar>(' '));
    pending_space = false;
    out.append(c);
  }
  return to_utf8(out);
}

std::string trim(std::string_view utf8) {
  auto s = from_utf8(utf8);
  int32_t begin = 0;
  int32_t end = s.length();
  while (begin < end && u_isUWhiteSpace(s.char32At(begin))) begin += U16_LENGTH(s.char32At(begin));
  while (end > begin) {
    const int32_t prev = s.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(s.char32At(prev))) break;
    end = prev;
  }
  return to_utf8(s.tempSubStringBetween(begin, end));
}

bool contains_folded(std::string_view haystack, std::string_view needle, bool whole_token) {
  if (needle.empty()) return false;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    if (!whole_token) return true;
    const UChar32 before = codepoint_before(haystack, pos);
    const UChar32 after = codepoint_at(haystack, pos + needle.size());
    if ((before < 0 || !is_word_codepoint(before)) && (after < 0 || !is_word_codepoint(after))) {
      return true;
    }
  }
  return false;
}

std::size_t codepoint_length(std::string_view utf8) {
  return static_cast<std::size_t>(from_utf8(utf8).countChar32());
}

}  // namespace geoprop::text
