#include "lowlogit/isan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lowlogit {

using nlohmann::json;

void IsanModel::validate() const {
    if (T < 1) throw DomainError("isan: horizon must be >= 1");
    if (sigma < 2) throw DomainError("isan: alphabet size must be >= 2");
    if (d < 1) throw DomainError("isan: dimension must be >= 1");
    if (mu.size() != d) throw DimensionError("isan: mu has wrong length");
    if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T)
        throw DimensionError("isan: need one A block and one B per step");
    for (int t = 0; t < T; ++t) {
        if (static_cast<int>(A[t].size()) != sigma) throw DimensionError("isan: A[t] needs one matrix per token");
        for (const auto& a : A[t])
            if (a.rows() != d || a.cols() != d || !a.allFinite()) throw DimensionError("isan: bad A matrix");
        if (B[t].rows() != sigma || B[t].cols() != d || !B[t].allFinite())
            throw DimensionError("isan: bad B matrix");
    }
    if (!mu.allFinite()) throw DomainError("isan: non-finite mu");
}

int parity_sign(std::uint32_t x, std::uint32_t mask) {
    return (__builtin_popcount(x & mask) & 1) ? -1 : 1;
}

std::uint32_t subset_mask(const std::vector<int>& subset) {
    std::uint32_t m = 0;
    for (int i : subset) m |= (1u << i);
    return m;
}

std::uint32_t bits_to_mask(const Seq& bits) {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) m |= (1u << i);
    return m;
}

double SparseBoolFn::eval(std::uint32_t x) const {
    double v = constant;
    for (const auto& term : terms) v += term.coef * parity_sign(x, subset_mask(term.subset));
    return v;
}

static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

SparseBoolFn parse_sparse_fn(const std::string& text, int n) {
    if (n < 1 || n > 24) throw DomainError("sparse fn: n must be in [1, 24]");
    SparseBoolFn f;
    f.n = n;
    std::set<std::uint32_t> seen;
    std::stringstream terms(text);
    std::string item;
    while (std::getline(terms, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos) throw DomainError("sparse fn: term '" + item + "' lacks ':coef'");
        std::string lhs = trim(item.substr(0, colon));
        std::string rhs = trim(item.substr(colon + 1));
        double coef;
        try {
            std::size_t used = 0;
            coef = std::stod(rhs, &used);
            if (used != rhs.size()) throw DomainError("");
        } catch (...) {
            throw DomainError("sparse fn: bad coefficient '" + rhs + "'");
        }
        std::vector<int> subset;
        std::stringstream idx(lhs);
        std::string tok;
        while (std::getline(idx, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            int i;
            try {
                i = std::stoi(tok);
            } catch (...) {
                throw DomainError("sparse fn: bad index '" + tok + "'");
            }
            if (i < 1 || i > n) throw DomainError("sparse fn: index out of range 1..n");
            subset.push_back(i - 1);
        }
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
        if (subset.empty()) {
            f.constant += coef;
            continue;
        }
        if (!seen.insert(subset_mask(subset)).second) throw DomainError("sparse fn: repeated subset");
        f.terms.push_back({subset, coef});
    }
    return f;
}

std::string format_sparse_fn(const SparseBoolFn& f) {
    std::string out;
    for (const auto& term : f.terms) {
        if (!out.empty()) out += ';';
        for (std::size_t k = 0; k < term.subset.size(); ++k) {
            if (k) out += ',';
            out += std::to_string(term.subset[k] + 1);
        }
        out += ':' + fmt17(term.coef);
    }
    if (f.constant != 0.0) {
        if (!out.empty()) out += ';';
        out += ':' + fmt17(f.constant);
    }
    return out;
}

static void check_tokens(const IsanModel& m, const Seq& s) {
    for (Token y : s)
        if (y < 0 || y >= m.sigma) throw DomainError("isan: token out of alphabet");
}

Eigen::VectorXd isan_state(const IsanModel& m, const Seq& prefix) {
    if (static_cast<int>(prefix.size()) > m.T) throw HorizonError("isan_state: prefix longer than horizon");
    check_tokens(m, prefix);
    Eigen::VectorXd x = m.mu;
    for (std::size_t t = 0; t < prefix.size(); ++t) x = m.A[t][static_cast<std::size_t>(prefix[t])] * x;
    return x;
}

Vec isan_next_logits(const IsanModel& m, const Seq& prefix) {
    if (static_cast<int>(prefix.size()) >= m.T) throw HorizonError("isan_next_logits: prefix at full horizon");
    Eigen::VectorXd x = isan_state(m, prefix);
    Eigen::VectorXd l = m.B[prefix.size()] * x;
    return Vec(l.data(), l.data() + l.size());
}

Seq isan_sample_prefix(const IsanModel& m, Rng& rng, int len) {
    if (len < 0 || len > m.T) throw HorizonError("isan_sample_prefix: bad length");
    Seq y;
    y.reserve(static_cast<std::size_t>(len));
    Eigen::VectorXd x = m.mu;
    for (int t = 0; t < len; ++t) {
        Eigen::VectorXd l = m.B[t] * x;
        Vec p = softmax(Vec(l.data(), l.data() + l.size()));
        Token tok = static_cast<Token>(sample_index(p, rng));
        y.push_back(tok);
        x = m.A[t][static_cast<std::size_t>(tok)] * x;
    }
    return y;
}

Seq isan_sample(const IsanModel& m, Rng& rng) { return isan_sample_prefix(m, rng, m.T); }

double isan_seq_logprob(const IsanModel& m, const Seq& y) {
    if (static_cast<int>(y.size()) != m.T) throw DomainError("isan_seq_logprob: sequence must have length T");
    check_tokens(m, y);
    double lp = 0.0;
    Eigen::VectorXd x = m.mu;
    for (int t = 0; t < m.T; ++t) {
        Eigen::VectorXd l = m.B[t] * x;
        Vec ls = log_softmax(Vec(l.data(), l.data() + l.size()));
        lp += ls[static_cast<std::size_t>(y[t])];
        x = m.A[t][static_cast<std::size_t>(y[t])] * x;
    }
    return lp;
}

static IsanModel blank_model(int T, int sigma, int d) {
    IsanModel m;
    m.T = T;
    m.sigma = sigma;
    m.d = d;
    m.mu = Eigen::VectorXd::Zero(d);
    m.A.assign(static_cast<std::size_t>(T),
               std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(sigma), Eigen::MatrixXd::Identity(d, d)));
    m.B.assign(static_cast<std::size_t>(T), Eigen::MatrixXd::Zero(sigma, d));
    return m;
}

IsanModel random_isan(int T, int sigma, int d, double scale, std::uint64_t seed) {
    if (!(scale > 0)) throw ParameterError("random_isan: scale must be positive");
    if (T < 1 || sigma < 2 || d < 1) throw ParameterError("random_isan: need T>=1, sigma>=2, d>=1");
    IsanModel m = blank_model(T, sigma, d);
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < d; ++i) m.mu(i) = scale * unif(rng);
    for (int t = 0; t < T; ++t) {
        for (int y = 0; y < sigma; ++y) {
            Eigen::MatrixXd a(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) a(r, c) = unif(rng);
            double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
            if (norm > 1.0) a /= norm;
            m.A[t][y] = a;
        }
        for (int r = 0; r < sigma; ++r)
            for (int c = 0; c < d; ++c) m.B[t](r, c) = scale * unif(rng);
    }
    m.meta = {{"seed", seed}, {"generator", "random_isan"},
              {"params", {{"T", T}, {"sigma", sigma}, {"d", d}, {"scale", scale}}}};
    return m;
}

IsanModel product_isan(int T, int sigma, double scale, std::uint64_t seed) {
    if (!(scale > 0)) throw ParameterError("product_isan: scale must be positive");
    IsanModel m = blank_model(T, sigma, 1);
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    m.mu(0) = 1.0;
    for (int t = 0; t < T; ++t)
        for (int r = 0; r < sigma; ++r) m.B[t](r, 0) = scale * unif(rng);
    m.meta = {{"seed", seed}, {"generator", "product_isan"},
              {"params", {{"T", T}, {"sigma", sigma}, {"scale", scale}}}};
    return m;
}

IsanModel uniform_isan(int T, int sigma) {
    IsanModel m = blank_model(T, sigma, 1);
    m.mu(0) = 1.0;
    m.meta = {{"seed", 0}, {"generator", "uniform_isan"}};
    return m;
}

IsanModel isan_from_sparse_fn(const SparseBoolFn& f, double logit_scale) {
    // the constant becomes its own coordinate (empty subset, never flips sign)
    std::vector<SparseTerm> terms = f.terms;
    if (f.constant != 0.0) terms.push_back({{}, f.constant});
    int d = std::max<int>(1, static_cast<int>(terms.size()));
    IsanModel m = blank_model(f.n + 1, 2, d);
    m.mu = Eigen::VectorXd::Ones(d);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (int bit : terms[i].subset) m.A[static_cast<std::size_t>(bit)][1](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = -1.0;
        m.B[static_cast<std::size_t>(f.n)](1, static_cast<Eigen::Index>(i)) = terms[i].coef * logit_scale;
    }
    m.meta = {{"seed", 0}, {"generator", "isan_from_sparse_fn"},
              {"params", {{"n", f.n}, {"fn", format_sparse_fn(f)}, {"logit_scale", logit_scale}}}};
    return m;
}

double isan_alpha_bound(const IsanModel& m) {
    double growth = 1.0;
    for (int t = 0; t < m.T; ++t) {
        double worst = 0.0;
        for (const auto& a : m.A[t]) worst = std::max(worst, Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0));
        growth *= std::max(1.0, worst);
    }
    double rows = 0.0;
    Eigen::MatrixXd center = Eigen::MatrixXd::Identity(m.sigma, m.sigma) -
                             Eigen::MatrixXd::Constant(m.sigma, m.sigma, 1.0 / m.sigma);
    for (const auto& b : m.B) {
        Eigen::MatrixXd cb = center * b;
        for (int r = 0; r < cb.rows(); ++r) rows = std::max(rows, cb.row(r).norm());
    }
    return std::max(m.mu.norm(), rows) * growth;
}

double isan_max_centered_logit(const IsanModel& m) {
    double best = 0.0;
    for (const Seq& p : all_sequences_upto(m.sigma, 0, m.T - 1))
        for (double v : mean_center(isan_next_logits(m, p))) best = std::max(best, std::abs(v));
    return best;
}

static json matrix_rows(const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (int r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(row);
    }
    return rows;
}

static Eigen::MatrixXd matrix_from_rows(const json& rows, int nr, int nc) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != nr) throw DimensionError("isan json: bad matrix rows");
    Eigen::MatrixXd a(nr, nc);
    for (int r = 0; r < nr; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != nc) throw DimensionError("isan json: bad matrix row");
        for (int c = 0; c < nc; ++c) a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return a;
}

json isan_to_json(const IsanModel& m) {
    json j;
    j["T"] = m.T;
    j["sigma"] = m.sigma;
    j["d"] = m.d;
    j["mu"] = std::vector<double>(m.mu.data(), m.mu.data() + m.mu.size());
    json A = json::array();
    for (int t = 0; t < m.T; ++t) {
        json per = json::array();
        for (int y = 0; y < m.sigma; ++y) per.push_back(matrix_rows(m.A[t][y]));
        A.push_back(per);
    }
    j["A"] = A;
    json B = json::array();
    for (int t = 0; t < m.T; ++t) B.push_back(matrix_rows(m.B[t]));
    j["B"] = B;
    j["meta"] = m.meta;
    return j;
}

IsanModel isan_from_json(const json& j) {
    IsanModel m;
    try {
        m.T = j.at("T").get<int>();
        m.sigma = j.at("sigma").get<int>();
        m.d = j.at("d").get<int>();
        if (m.T < 1 || m.sigma < 2 || m.d < 1) throw DomainError("isan json: bad T/sigma/d");
        auto mu = j.at("mu").get<std::vector<double>>();
        if (static_cast<int>(mu.size()) != m.d) throw DimensionError("isan json: mu length");
        m.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), m.d);
        const json& A = j.at("A");
        const json& B = j.at("B");
        if (static_cast<int>(A.size()) != m.T || static_cast<int>(B.size()) != m.T)
            throw DimensionError("isan json: A/B length");
        m.A.resize(static_cast<std::size_t>(m.T));
        for (int t = 0; t < m.T; ++t) {
            if (static_cast<int>(A[static_cast<std::size_t>(t)].size()) != m.sigma)
                throw DimensionError("isan json: A[t] length");
            for (int y = 0; y < m.sigma; ++y)
                m.A[t].push_back(matrix_from_rows(A[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)], m.d, m.d));
            m.B.push_back(matrix_from_rows(B[static_cast<std::size_t>(t)], m.sigma, m.d));
        }
        if (j.contains("meta")) m.meta = j["meta"];
    } catch (const json::exception& e) {
        throw DomainError(std::string("isan json: ") + e.what());
    }
    m.validate();
    return m;
}

void save_isan(const IsanModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << isan_to_json(m).dump(1) << "\n";
}

IsanModel load_isan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DomainError(path + ": " + e.what());
    }
    return isan_from_json(j);
}

}  // namespace lowlogit
