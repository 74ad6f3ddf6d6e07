#pragma once

#include <string>
#include <string_view>

namespace relcap {

/// Porter suffix-stripping stemmer, following Martin Porter's reference C
/// implementation (including its "bli" and "logi" rules). Words of two
/// letters or fewer, and words with characters outside a-z, are returned
/// unchanged.
std::string porter_stem(std::string_view word);

}  // namespace relcap
