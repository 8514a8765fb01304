#pragma once

#include "flowlab/config.hpp"

#include <optional>
#include <string>

namespace flowlab::cli {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

// Exit status: 0 pass, 2 verdict failure, 1 config or runtime error.
int run(const Options& opt);
int check(const Options& opt);
int decompose(const Options& opt);
int moments(const Options& opt);
int bel(const Options& opt);
int semigroup(const Options& opt);
int invariant(const Options& opt);
int oracle(const Options& opt);
int list();

}  // namespace flowlab::cli
