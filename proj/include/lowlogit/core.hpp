#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lowlogit {

using Token = int;
using Seq = std::vector<Token>;
using Vec = std::vector<double>;
using Rng = std::mt19937_64;

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct HorizonError : std::out_of_range {
    using std::out_of_range::out_of_range;
};
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ScaleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
// numerical breakdown inside a solver, as opposed to a legitimate "no solution"
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// a checked internal contract failed
struct ConsistencyError : std::logic_error {
    using std::logic_error::logic_error;
};

Vec softmax(const Vec& logits);
Vec log_softmax(const Vec& logits);
Vec mean_center(const Vec& v);
double tv_distance(const Vec& p, const Vec& q);
double max_abs_diff(const Vec& a, const Vec& b);

Seq concat(const Seq& a, const Seq& b);
Seq concat(const Seq& a, Token y);
Seq slice(const Seq& s, std::size_t begin, std::size_t end);

// FNV-1a over (length, tokens) folded through splitmix64 with the seed
std::uint64_t hash_seq(const Seq& s, std::uint64_t seed = 0);
std::uint64_t splitmix64(std::uint64_t x);

struct SeqHash {
    std::size_t operator()(const Seq& s) const { return hash_seq(s); }
};

std::size_t sample_index(const Vec& probs, Rng& rng);

// all sequences of exactly `len` tokens, lexicographic (first token most significant)
std::vector<Seq> all_sequences(int sigma, int len);
// all sequences with length in [min_len, max_len], shorter first
std::vector<Seq> all_sequences_upto(int sigma, int min_len, int max_len);
std::size_t ipow(std::size_t base, int exp);

std::string seq_to_string(const Seq& s);  // "0 2 1"
Seq seq_from_string(const std::string& text);
std::string fmt17(double x);

void set_quiet(bool quiet);
bool is_quiet();
void warn(const std::string& msg);

}  // namespace lowlogit
