#pragma once

#include <string_view>

namespace lund::resources {

// Contents of the shipped data/ files, embedded at build time.
std::string_view default_stoplist();
std::string_view default_suffix_rules();
std::string_view default_sentiment_lexicon();

}  // namespace lund::resources
