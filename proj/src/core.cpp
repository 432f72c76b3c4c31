#include "lowlogit/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>

namespace lowlogit {

Vec softmax(const Vec& logits) {
    Vec out(logits.size());
    if (logits.empty()) return out;
    double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

Vec log_softmax(const Vec& logits) {
    Vec out(logits.size());
    if (logits.empty()) return out;
    double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits) total += std::exp(v - mx);
    double lse = mx + std::log(total);
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

Vec mean_center(const Vec& v) {
    Vec out(v);
    if (v.empty()) return out;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : out) x -= mean;
    return out;
}

double tv_distance(const Vec& p, const Vec& q) {
    if (p.size() != q.size())
        throw DimensionError("tv_distance: index sets differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return std::min(1.0, 0.5 * acc);
}

double max_abs_diff(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Seq concat(const Seq& a, const Seq& b) {
    Seq out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Seq concat(const Seq& a, Token y) {
    Seq out(a);
    out.push_back(y);
    return out;
}

Seq slice(const Seq& s, std::size_t begin, std::size_t end) {
    return Seq(s.begin() + static_cast<std::ptrdiff_t>(begin), s.begin() + static_cast<std::ptrdiff_t>(end));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_seq(const Seq& s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    };
    mix(s.size());
    for (Token t : s) mix(static_cast<std::uint64_t>(t));
    return splitmix64(h ^ splitmix64(seed));
}

std::size_t sample_index(const Vec& probs, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // rounding left u above the cumulative sum; take the last positive entry
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return probs.size() - 1;
}

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

std::vector<Seq> all_sequences(int sigma, int len) {
    std::vector<Seq> out;
    std::size_t total = ipow(static_cast<std::size_t>(sigma), len);
    out.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        Seq s(static_cast<std::size_t>(len));
        std::size_t c = code;
        for (int k = len - 1; k >= 0; --k) {
            s[static_cast<std::size_t>(k)] = static_cast<Token>(c % static_cast<std::size_t>(sigma));
            c /= static_cast<std::size_t>(sigma);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Seq> all_sequences_upto(int sigma, int min_len, int max_len) {
    std::vector<Seq> out;
    for (int len = min_len; len <= max_len; ++len) {
        auto level = all_sequences(sigma, len);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

std::string seq_to_string(const Seq& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(s[i]);
    }
    return out;
}

Seq seq_from_string(const std::string& text) {
    Seq out;
    std::istringstream in(text);
    Token t;
    while (in >> t) out.push_back(t);
    return out;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

static std::atomic<bool> g_quiet{false};

void set_quiet(bool quiet) { g_quiet = quiet; }
bool is_quiet() { return g_quiet; }

void warn(const std::string& msg) {
    if (!g_quiet) std::cerr << "warning: " << msg << "\n";
}

}  // namespace lowlogit
