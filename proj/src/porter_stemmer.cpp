// Porter, "An algorithm for suffix stripping", Program 14(3), 1980.
#include <string>

#include "chartforge/metrics.hpp"

namespace chartforge::metrics {

namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string w) : b_(std::move(w)) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return b_;
  }

 private:
  bool cons(std::size_t i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b_[0, j_].
  int measure() const {
    int n = 0;
    std::size_t i = 0;
    for (;;) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    for (;;) {
      for (;;) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      for (;;) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (std::size_t i = 0; i <= j_; ++i)
      if (!cons(i)) return true;
    return false;
  }

  bool double_cons(std::size_t j) const {
    return j >= 1 && b_[j] == b_[j - 1] && cons(j);
  }

  // cvc at i where the final c is not w, x or y.
  bool cvc(std::size_t i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(const std::string& s) {
    if (s.size() > b_.size()) return false;
    if (b_.compare(b_.size() - s.size(), s.size(), s) != 0) return false;
    // j_ is the index of the last stem character; a stem may be empty.
    stem_len_ = b_.size() - s.size();
    j_ = stem_len_ == 0 ? kEmpty : stem_len_ - 1;
    return true;
  }

  void set_to(const std::string& s) { b_ = b_.substr(0, stem_len_) + s; }

  int m() const { return stem_len_ == 0 ? 0 : measure(); }

  void replace_if_m(const std::string& s) {
    if (m() > 0) set_to(s);
  }

  bool stem_has_vowel() const { return stem_len_ > 0 && vowel_in_stem(); }

  void step1ab() {
    if (b_.back() == 's') {
      if (ends("sses")) {
        set_to("ss");
      } else if (ends("ies")) {
        set_to("i");
      } else if (b_.size() >= 2 && b_[b_.size() - 2] != 's') {
        b_.pop_back();
      }
    }
    if (ends("eed")) {
      if (m() > 0) b_.pop_back();
    } else if ((ends("ed") || ends("ing")) && stem_has_vowel()) {
      b_.resize(stem_len_);
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_cons(b_.size() - 1)) {
        const char ch = b_.back();
        if (ch != 'l' && ch != 's' && ch != 'z') b_.pop_back();
      } else {
        stem_len_ = b_.size();
        j_ = stem_len_ - 1;
        if (m() == 1 && cvc(b_.size() - 1)) b_.push_back('e');
      }
    }
  }

  void step1c() {
    if (ends("y") && stem_has_vowel()) b_.back() = 'i';
  }

  bool try_map(const char* const (*table)[2], std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (ends(table[k][0])) {
        replace_if_m(table[k][1]);
        return true;
      }
    }
    return false;
  }

  void step2() {
    static const char* const kTable[][2] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"}, {"biliti", "ble"},
        {"logi", "log"}};
    try_map(kTable, sizeof(kTable) / sizeof(kTable[0]));
  }

  void step3() {
    static const char* const kTable[][2] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"},
                                            {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""},
                                            {"ness", ""}};
    try_map(kTable, sizeof(kTable) / sizeof(kTable[0]));
  }

  void step4() {
    static const char* const kSuffixes[] = {
        "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
        "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
    // Longest matching suffix wins.
    std::string best;
    for (const char* s : kSuffixes) {
      std::string suffix(s);
      if (suffix.size() > best.size() && b_.size() >= suffix.size() &&
          b_.compare(b_.size() - suffix.size(), suffix.size(), suffix) == 0) {
        best = suffix;
      }
    }
    if (best.empty()) return;
    ends(best);
    if (best == "ion") {
      if (stem_len_ == 0) return;
      const char ch = b_[stem_len_ - 1];
      if (ch != 's' && ch != 't') return;
    }
    if (m() > 1) b_.resize(stem_len_);
  }

  void step5() {
    stem_len_ = b_.size();
    j_ = stem_len_ - 1;
    if (b_.back() == 'e') {
      stem_len_ = b_.size() - 1;
      j_ = stem_len_ == 0 ? kEmpty : stem_len_ - 1;
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(stem_len_ - 1))) b_.pop_back();
    }
    stem_len_ = b_.size();
    j_ = stem_len_ - 1;
    if (b_.back() == 'l' && double_cons(b_.size() - 1) && measure() > 1) b_.pop_back();
  }

  static constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);

  std::string b_;
  std::size_t j_ = 0;
  std::size_t stem_len_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return std::string(word);
  }
  return Stemmer(std::string(word)).run();
}

}  // namespace chartforge::metrics
