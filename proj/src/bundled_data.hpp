#pragma once

#include <string_view>

namespace bankbench::detail {

// Contents of data/stopwords.txt and data/lemma_exceptions.tsv, embedded at
// configure time (see src/bundled_data.cpp.in).
std::string_view stopwords_data();
std::string_view lemma_exceptions_data();

}  // namespace bankbench::detail
