#include "relcap/porter.hpp"

#include <algorithm>

namespace relcap {

namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string_view w) : b_(w), k_(static_cast<int>(w.size()) - 1) {}

  std::string run() {
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<std::size_t>(k_ + 1));
  }

 private:
  bool cons(int i) const {
    switch (b_[static_cast<std::size_t>(i)]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of consonant-vowel sequences in b[0..j].
  int m() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_cons(int j) const {
    if (j < 1) return false;
    if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
    return cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[static_cast<std::size_t>(i)];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (b_.compare(static_cast<std::size_t>(k_ - len + 1), s.size(), s) != 0) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void r(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

  void step1ab() {
    if (at(k_) == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (at(k_ - 1) != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_cons(k_)) {
        --k_;
        const char ch = at(k_);
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else {
        j_ = k_;
        if (m() == 1 && cvc(k_)) set_to("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  // The first matching suffix in each list decides, whether or not the
  // measure condition then allows the rewrite.
  template <std::size_t N>
  void rewrite_first(const std::pair<std::string_view, std::string_view> (&rules)[N]) {
    for (const auto& [from, to] : rules) {
      if (ends(from)) {
        r(to);
        return;
      }
    }
  }

  void step2() {
    if (k_ < 1) return;
    switch (at(k_ - 1)) {
      case 'a': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"ational", "ate"},
                                                                                  {"tional", "tion"}};
        rewrite_first(rules);
        break;
      }
      case 'c': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"enci", "ence"}, {"anci", "ance"}};
        rewrite_first(rules);
        break;
      }
      case 'e': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"izer", "ize"}};
        rewrite_first(rules);
        break;
      }
      case 'l': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
        rewrite_first(rules);
        break;
      }
      case 'o': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
        rewrite_first(rules);
        break;
      }
      case 's': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
        rewrite_first(rules);
        break;
      }
      case 't': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
        rewrite_first(rules);
        break;
      }
      case 'g': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"logi", "log"}};
        rewrite_first(rules);
        break;
      }
      default:
        break;
    }
  }

  void step3() {
    switch (at(k_)) {
      case 'e': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
        rewrite_first(rules);
        break;
      }
      case 'i': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"iciti", "ic"}};
        rewrite_first(rules);
        break;
      }
      case 'l': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"ical", "ic"}, {"ful", ""}};
        rewrite_first(rules);
        break;
      }
      case 's': {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {{"ness", ""}};
        rewrite_first(rules);
        break;
      }
      default:
        break;
    }
  }

  bool ends_any(std::initializer_list<std::string_view> suffixes) {
    return std::any_of(suffixes.begin(), suffixes.end(), [&](std::string_view s) { return ends(s); });
  }

  void step4() {
    if (k_ < 1) return;
    bool hit = false;
    switch (at(k_ - 1)) {
      case 'a':
        hit = ends("al");
        break;
      case 'c':
        hit = ends_any({"ance", "ence"});
        break;
      case 'e':
        hit = ends("er");
        break;
      case 'i':
        hit = ends("ic");
        break;
      case 'l':
        hit = ends_any({"able", "ible"});
        break;
      case 'n':
        hit = ends_any({"ant", "ement", "ment", "ent"});
        break;
      case 'o':
        hit = (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) || ends("ou");
        break;
      case 's':
        hit = ends("ism");
        break;
      case 't':
        hit = ends_any({"ate", "iti"});
        break;
      case 'u':
        hit = ends("ous");
        break;
      case 'v':
        hit = ends("ive");
        break;
      case 'z':
        hit = ends("ize");
        break;
      default:
        break;
    }
    if (hit && m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (at(k_) == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (at(k_) == 'l' && double_cons(k_)) {
      j_ = k_;
      if (m() > 1) --k_;
    }
  }

  std::string b_;
  int k_;
  int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
  if (word.size() <= 2) return std::string(word);
  if (!std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; })) return std::string(word);
  return Stemmer(word).run();
}

}  // namespace relcap
