#include "lowlogit/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "lowlogit/eval.hpp"
#include "lowlogit/isan.hpp"
#include "lowlogit/km.hpp"
#include "lowlogit/learner.hpp"
#include "lowlogit/oracle.hpp"
#include "lowlogit/sampler.hpp"

namespace lowlogit {

using nlohmann::json;

namespace {

struct BudgetExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One option that round-trips through the embedded run config.
struct Param {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> load;
    std::function<json()> dump;
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<Param> params;

    template <class V>
    void add(const std::string& key, V& var, const std::string& desc) {
        std::string flag = "--" + key;
        for (auto& ch : flag)
            if (ch == '_') ch = '-';
        CLI::Option* o = app->add_option(flag, var, desc)->capture_default_str();
        params.push_back({key, o, [&var](const json& j) { var = j.get<V>(); }, [&var] { return json(var); }});
    }
};

struct Globals {
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
    bool quiet = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

json find_run_config(const json& j) {
    if (j.contains("meta") && j["meta"].contains("run_config")) return j["meta"]["run_config"];
    if (j.contains("run_config")) return j["run_config"];
    return j;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file: " + path);
    std::string first;
    std::getline(in, first);
    const std::string tag = "# run_config: ";
    try {
        if (first.rfind(tag, 0) == 0) return json{{"run_config", json::parse(first.substr(tag.size()))}};
        in.clear();
        in.seekg(0);
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DomainError(std::string("config file is not valid JSON: ") + e.what());
    }
}

// Values from the config file fill only options not given on the command line.
void apply_config(const std::string& name, Command& cmd, Globals& g) {
    if (g.config.empty()) return;
    json rc = find_run_config(read_json_file(g.config));
    if (rc.contains("command") && rc["command"].get<std::string>() != name)
        throw ParameterError("config was written by '" + rc["command"].get<std::string>() + "', not '" + name + "'");
    try {
        if (g.seed_opt->count() == 0 && rc.contains("seed")) g.seed = rc["seed"].get<std::uint64_t>();
        if (g.out_opt->count() == 0 && rc.contains("out")) g.out = rc["out"].get<std::string>();
        if (!rc.contains("params")) return;
        const json& ps = rc["params"];
        for (auto& p : cmd.params)
            if (p.opt->count() == 0 && ps.contains(p.key)) p.load(ps[p.key]);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config value has the wrong type: ") + e.what());
    }
}

json resolved(const std::string& name, const Command& cmd, const Globals& g) {
    json ps = json::object();
    for (const auto& p : cmd.params) ps[p.key] = p.dump();
    return {{"command", name}, {"seed", g.seed}, {"out", g.out}, {"params", ps}};
}

// Text outputs carry the run config as a leading '#' line.
void write_text(const std::string& path, const json& rc, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write " + path);
    f << "# run_config: " << rc.dump() << "\n" << body;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParameterError("bad integer in list: '" + item + "'");
        }
    }
    return out;
}

// ---- gen-model

struct GenArgs {
    std::string kind = "random";
    int T = 5, sigma = 3, d = 3;
    double scale = 1.0;
    int n = 6;
    std::string fn = "1:1";
    double logit_scale = 1.0;
};

void run_gen(const GenArgs& a, const Globals& g, const json& rc) {
    if (g.out.empty()) throw ParameterError("gen-model needs --out");
    IsanModel m;
    if (a.kind == "random") {
        if (a.d < 1) throw ParameterError("d must be >= 1");
        m = random_isan(a.T, a.sigma, a.d, a.scale, g.seed);
    } else if (a.kind == "product") {
        m = product_isan(a.T, a.sigma, a.scale, g.seed);
    } else if (a.kind == "sparse") {
        m = isan_from_sparse_fn(parse_sparse_fn(a.fn, a.n), a.logit_scale);
    } else {
        throw ParameterError("unknown model kind '" + a.kind + "'");
    }
    m.meta["run_config"] = rc;
    save_isan(m, g.out);
}

// ---- learn

struct LearnArgs {
    std::string model;
    std::string oracle = "exact";
    double eps_apx = 0.0;  // 0: nominal floor for the exact oracle
    std::string noise_mode = "uniform-bounded";
    double lambda = 1.0;
    double emp_eps = 0.1;
    double emp_delta = 0.1;
    double tau = 1.0;
    int d = 0;         // 0: the model's dimension
    double alpha = 0;  // 0: bound computed from the model
    double eps = 0.1;
    double delta = 0.1;
    int K = 0, n_samples = 0;
    double gamma_thres = 0, eta = 0;
    double c_K = 2.0, c_n = 2.0, c_ell = 4.0, c_m = 1.0;
    std::size_t m_max = 2000;
    double tau_feas = 1e-8;
    bool lemma_n = false;
    std::string log;
    std::string trace;
};

void run_learn(const LearnArgs& a, const Globals& g, const json& rc) {
    if (g.out.empty()) throw ParameterError("learn needs --out");
    const IsanModel model = load_isan(a.model);
    IsanConditional cond(model);
    std::unique_ptr<LogitOracle> base, wrapped;
    std::unique_ptr<TemperatureOracle> tempered;
    std::unique_ptr<TrajectorySampler> sampler;
    LogitOracle* oracle = nullptr;
    double eps_apx = a.eps_apx > 0 ? a.eps_apx : 1e-6;
    double alpha = a.alpha > 0 ? a.alpha : isan_alpha_bound(model);

    if (a.oracle == "exact") {
        base = std::make_unique<ExactOracle>(model);
        oracle = base.get();
        sampler = std::make_unique<IsanTrajectorySampler>(model);
    } else if (a.oracle == "noisy") {
        if (!(a.eps_apx > 0)) throw ParameterError("noisy oracle needs --eps-apx > 0");
        base = std::make_unique<ExactOracle>(model);
        wrapped = std::make_unique<NoisyOracle>(*base, NoiseSpec{a.eps_apx, parse_noise_mode(a.noise_mode), g.seed});
        oracle = wrapped.get();
        sampler = std::make_unique<IsanTrajectorySampler>(model);
    } else if (a.oracle == "empirical") {
        base = std::make_unique<EmpiricalOracle>(cond, a.lambda, a.emp_eps, a.emp_delta, g.seed);
        oracle = base.get();
        eps_apx = a.emp_eps;
        sampler = std::make_unique<IsanTrajectorySampler>(model);
    } else if (a.oracle == "temperature") {
        // the target becomes the tempered model
        tempered = temperature_oracle(model, a.tau);
        oracle = tempered.get();
        alpha = alpha / a.tau;
        sampler = std::make_unique<ConditionalTrajectorySampler>(tempered->sampler());
    } else {
        throw ParameterError("unknown oracle '" + a.oracle + "'");
    }

    ParamOverrides over;
    if (a.K > 0) over.K = a.K;
    if (a.n_samples > 0) over.n = a.n_samples;
    if (a.gamma_thres > 0) over.gamma_thres = a.gamma_thres;
    if (a.eta > 0) over.eta = a.eta;
    over.c_K = a.c_K;
    over.c_n = a.c_n;
    over.c_ell = a.c_ell;
    over.c_m = a.c_m;
    over.m_max = a.m_max;
    over.tau_feas = a.tau_feas;
    over.lemma_n = a.lemma_n;
    over.seed = g.seed;
    const int d = a.d > 0 ? a.d : model.d;
    LearnerConfig cfg = default_params(model.T, model.sigma, d, alpha, a.eps, a.delta, eps_apx, over);
    LearnResult res = learn(*oracle, *sampler, cfg);

    json full = rc;
    full["learner"] = config_to_json(cfg);
    std::ostringstream log;
    write_run_log(res.stats, log);
    write_text(a.log.empty() ? g.out + ".log.csv" : a.log, full, log.str());
    if (!a.trace.empty()) {
        std::ostringstream tr;
        oracle->trace().write_csv(tr);
        write_text(a.trace, full, tr.str());
    }
    if (res.budget_exhausted()) throw BudgetExhausted("epoch budget K exhausted before a full passing sweep");
    LearnedModel lm = *res.model;
    lm.meta["run_config"] = full;
    save_learned(lm, g.out);
    if (!is_quiet())
        std::cerr << "learned d*=" << lm.dstar << " epochs=" << res.stats.epochs << " queries=" << res.stats.queries
                  << "\n";
}

// ---- sample

struct SampleArgs {
    std::string learned;
    int count = 10;
};

void run_sample(const SampleArgs& a, const Globals& g, const json& rc) {
    if (a.count < 0) throw ParameterError("count must be >= 0");
    LearnedModel lm = load_learned(a.learned);
    Rng rng(g.seed);
    std::ostringstream body;
    for (int i = 0; i < a.count; ++i) body << format_outcome(sample(lm, rng)) << "\n";
    write_text(g.out, rc, body.str());
}

// ---- eval-tv

struct EvalArgs {
    std::string model;
    std::string learned;
    std::string against;  // a second true model instead of a learned one
};

void run_eval(const EvalArgs& a, const Globals& g, const json& rc) {
    IsanModel m = load_isan(a.model);
    double tv = 0.0, fail = 0.0;
    if (!a.learned.empty() == !a.against.empty()) throw ParameterError("eval-tv needs exactly one of --learned, --against");
    if (!a.learned.empty()) {
        LearnedModel lm = load_learned(a.learned);
        if (lm.T != m.T || lm.sigma != m.sigma) throw ParameterError("model and learned model disagree on T or Sigma");
        LearnedDist ld = enumerate_learned_dist(lm);
        tv = tv_with_failure(enumerate_true_dist(m), ld);
        fail = ld.fail_mass;
    } else {
        IsanModel other = load_isan(a.against);
        if (other.T != m.T || other.sigma != m.sigma) throw ParameterError("models disagree on T or Sigma");
        LearnedDist ld{enumerate_true_dist(other), 0.0};
        tv = tv_with_failure(enumerate_true_dist(m), ld);
    }
    write_text(g.out, rc, "tv=" + fmt17(tv) + " failure_mass=" + fmt17(fail) + "\n");
}

// ---- rank-probe

struct ProbeArgs {
    std::string model;
    std::string mode = "enumerate";
    std::string ranks = "1,2,3,4,5,6";
    int s = 1;
    int t = 0;  // sampled mode; 0 means T
    int rows = 200;
    int cols = 200;
};

void run_probe(const ProbeArgs& a, const Globals& g, const json& rc) {
    IsanModel m = load_isan(a.model);
    std::vector<int> ranks = parse_int_list(a.ranks);
    if (ranks.empty()) throw ParameterError("empty rank list");
    LogitMatrix L;
    if (a.mode == "enumerate") {
        if (a.s < 0 || a.s > m.T - 1) throw EmptyInputError("history length outside [0, T-1] leaves no rows");
        if (ipow(static_cast<std::size_t>(m.sigma), a.s) > 100000 ||
            ipow(static_cast<std::size_t>(m.sigma), m.T - 1 - a.s) > 100000)
            throw ScaleError("enumerated logit matrix too large");
        L = build_logit_matrix(m, all_sequences(m.sigma, a.s), all_sequences_upto(m.sigma, 0, m.T - 1 - a.s));
    } else if (a.mode == "sampled") {
        L = sample_logit_matrix(m, a.s, a.t > 0 ? a.t : m.T, a.rows, a.cols, g.seed);
    } else {
        throw ParameterError("unknown probe mode '" + a.mode + "'");
    }
    RankProfile rp = rank_profile(L.values, ranks);
    rp.seed = g.seed;
    std::ostringstream body;
    write_rank_profile_csv(rp, body);
    write_text(g.out, rc, body.str());
}

// ---- km-demo

struct KmArgs {
    int n = 6;
    std::string fn = "1:1";
    int d = 0;  // 0: number of terms
    double eps = 0.1;
    double delta = 0.1;
    int K = 0, n_samples = 0;
    double gamma_thres = 0;
    std::size_t m_max = 2000;
};

void run_km(const KmArgs& a, const Globals& g, const json& rc) {
    if (a.n < 1 || a.n > kMaxEnumerableBits) throw ScaleError("km-demo: n must be in [1, 12]");
    SparseBoolFn fn = parse_sparse_fn(a.fn, a.n);
    const int terms = static_cast<int>(fn.terms.size()) + (fn.constant != 0.0 ? 1 : 0);
    const int d = a.d > 0 ? a.d : std::max(1, terms);
    ParamOverrides over;
    if (a.K > 0) over.K = a.K;
    if (a.n_samples > 0) over.n = a.n_samples;
    if (a.gamma_thres > 0) over.gamma_thres = a.gamma_thres;
    over.m_max = a.m_max;
    BoolFnOracle f = sparse_fn_oracle(fn);
    LearnedBoolFn res = km_learn(f, a.n, d, a.eps, a.delta, g.seed, over);
    double mse = km_mse(res, fn_table(fn));
    std::ostringstream body;
    body << "n,d,terms,eps_target,mse,f_queries,epochs\n"
         << a.n << "," << d << "," << terms << "," << fmt17(a.eps) << "," << fmt17(mse) << "," << res.f_queries << ","
         << res.epochs << "\n";
    write_text(g.out, rc, body.str());
    if (!res.converged) throw BudgetExhausted("km-demo: epoch budget exhausted");
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"lowlogit: learn low logit rank sequence models from logit queries"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    g.seed_opt = app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--config", g.config, "JSON run config (or an output carrying one)");
    g.out_opt = app.add_option("--out", g.out, "output path (stdout for text outputs when omitted)");
    app.add_flag("--quiet", g.quiet, "suppress warnings");

    GenArgs ga;
    Command gen{app.add_subcommand("gen-model", "write a synthetic model"), {}};
    gen.add("kind", ga.kind, "random | product | sparse");
    gen.add("T", ga.T, "horizon");
    gen.add("sigma", ga.sigma, "alphabet size");
    gen.add("d", ga.d, "state dimension");
    gen.add("scale", ga.scale, "readout scale");
    gen.add("n", ga.n, "bits (sparse kind)");
    gen.add("fn", ga.fn, "sparse function, e.g. 1,2:0.5;3:0.5");
    gen.add("logit_scale", ga.logit_scale, "logit multiplier (sparse kind)");

    LearnArgs la;
    Command lrn{app.add_subcommand("learn", "learn from logit queries"), {}};
    lrn.add("model", la.model, "model JSON");
    lrn.add("oracle", la.oracle, "exact | noisy | empirical | temperature");
    lrn.add("eps_apx", la.eps_apx, "oracle error bound");
    lrn.add("noise_mode", la.noise_mode, "uniform-bounded | adversarial-roundoff");
    lrn.add("lambda", la.lambda, "logit bound for the empirical oracle");
    lrn.add("emp_eps", la.emp_eps, "empirical oracle accuracy");
    lrn.add("emp_delta", la.emp_delta, "empirical oracle failure probability");
    lrn.add("tau", la.tau, "temperature");
    lrn.add("d", la.d, "rank (0: model dimension)");
    lrn.add("alpha", la.alpha, "coefficient bound (0: computed)");
    lrn.add("eps", la.eps, "target TV");
    lrn.add("delta", la.delta, "failure probability");
    lrn.add("K", la.K, "epoch budget (0: schedule)");
    lrn.add("n_samples", la.n_samples, "trajectories per step (0: schedule)");
    lrn.add("gamma_thres", la.gamma_thres, "discrepancy threshold (0: schedule)");
    lrn.add("eta", la.eta, "spanner accuracy (0: schedule)");
    lrn.add("c_K", la.c_K, "epoch constant");
    lrn.add("c_n", la.c_n, "trajectory constant");
    lrn.add("c_ell", la.c_ell, "addition constant");
    lrn.add("c_m", la.c_m, "spanner batch constant");
    lrn.add("m_max", la.m_max, "spanner batch cap");
    lrn.add("tau_feas", la.tau_feas, "LP feasibility tolerance");
    lrn.add("lemma_n", la.lemma_n, "use the coverage-lemma trajectory count");
    lrn.add("log", la.log, "run log CSV (default <out>.log.csv)");
    lrn.add("trace", la.trace, "oracle trace CSV");

    SampleArgs sa;
    Command smp{app.add_subcommand("sample", "sample sequences from a learned model"), {}};
    smp.add("learned", sa.learned, "learned model JSON");
    smp.add("count", sa.count, "number of sequences");

    EvalArgs ea;
    Command ev{app.add_subcommand("eval-tv", "exact TV between a model and a learned model"), {}};
    ev.add("model", ea.model, "true model JSON");
    ev.add("learned", ea.learned, "learned model JSON");
    ev.add("against", ea.against, "second true model JSON");

    ProbeArgs pa;
    Command prb{app.add_subcommand("rank-probe", "low-rank approximation error of a logit matrix"), {}};
    prb.add("model", pa.model, "model JSON");
    prb.add("mode", pa.mode, "enumerate | sampled");
    prb.add("ranks", pa.ranks, "comma-separated ranks");
    prb.add("s", pa.s, "history length");
    prb.add("t", pa.t, "column step, sampled mode (0: T)");
    prb.add("rows", pa.rows, "sampled rows");
    prb.add("cols", pa.cols, "sampled futures");

    KmArgs ka;
    Command km{app.add_subcommand("km-demo", "learn a sparse boolean function through the sequence learner"), {}};
    km.add("n", ka.n, "bits");
    km.add("fn", ka.fn, "sparse function, e.g. 1,2:0.5;3:0.5");
    km.add("d", ka.d, "rank (0: number of terms)");
    km.add("eps", ka.eps, "target error");
    km.add("delta", ka.delta, "failure probability");
    km.add("K", ka.K, "epoch budget (0: schedule)");
    km.add("n_samples", ka.n_samples, "trajectories per step (0: schedule)");
    km.add("gamma_thres", ka.gamma_thres, "discrepancy threshold (0: schedule)");
    km.add("m_max", ka.m_max, "spanner batch cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    set_quiet(g.quiet);

    try {
        auto dispatch = [&](Command& c, const std::string& name, auto&& fn) {
            apply_config(name, c, g);
            fn(resolved(name, c, g));
        };
        if (gen.app->parsed())
            dispatch(gen, "gen-model", [&](const json& rc) { run_gen(ga, g, rc); });
        else if (lrn.app->parsed())
            dispatch(lrn, "learn", [&](const json& rc) { run_learn(la, g, rc); });
        else if (smp.app->parsed())
            dispatch(smp, "sample", [&](const json& rc) { run_sample(sa, g, rc); });
        else if (ev.app->parsed())
            dispatch(ev, "eval-tv", [&](const json& rc) { run_eval(ea, g, rc); });
        else if (prb.app->parsed())
            dispatch(prb, "rank-probe", [&](const json& rc) { run_probe(pa, g, rc); });
        else if (km.app->parsed())
            dispatch(km, "km-demo", [&](const json& rc) { run_km(ka, g, rc); });
    } catch (const BudgetExhausted& e) {
        std::cerr << "budget exhausted: " << e.what() << "\n";
        return kExitBudget;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const HorizonError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ScaleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const EmptyInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace lowlogit
