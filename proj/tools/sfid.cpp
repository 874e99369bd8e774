// sfid: generate key sets, build and query structures, audit space, bench probes.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfid/container.hpp"
#include "sfid/fid_advanced.hpp"
#include "sfid/fid_basic.hpp"
#include "sfid/keygen.hpp"

using namespace sfid;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitBudget = 1;
constexpr int kExitError = 2;

std::uint64_t parse_u64(const std::string& s) {
    if (auto caret = s.find('^'); caret != std::string::npos) {
        std::uint64_t base = std::stoull(s.substr(0, caret));
        unsigned e = static_cast<unsigned>(std::stoul(s.substr(caret + 1)));
        if (base != 2 || e > 63) throw ParameterError("only 2^k with k <= 63 is accepted: " + s);
        return std::uint64_t{1} << e;
    }
    std::size_t used = 0;
    std::uint64_t v = std::stoull(s, &used, 0);
    if (used != s.size()) throw ParameterError("not an integer: " + s);
    return v;
}

Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    Rational r;
    if (slash == std::string::npos) {
        r = {parse_u64(s), 1};
    } else {
        r = {parse_u64(s.substr(0, slash)), parse_u64(s.substr(slash + 1))};
    }
    if (r.num == 0 || r.den == 0) throw ParameterError("expected a positive rational: " + s);
    return r;
}

FidKind parse_kind(const std::string& s) {
    for (FidKind k : {FidKind::basic, FidKind::advanced, FidKind::select_dict, FidKind::partial_sum}) {
        if (s == kind_name(k)) return k;
    }
    throw ParameterError("unknown kind '" + s + "' (fid-basic|fid-advanced|select-dict|partial-sum)");
}

struct BuildFlags {
    std::string kind = "fid-advanced";
    std::string keys;
    std::string out;
    unsigned t = 1;
    std::string eps = "1/4";
    std::string alpha_min = "1/2";
    std::uint64_t l_thresh = 0;
    unsigned t_inner = 0;
    std::string eps_inner;
    unsigned ell = 0;
};

Structure build_structure(const BuildFlags& f, const KeyFile& input) {
    FidKind kind = parse_kind(f.kind);
    if (kind == FidKind::partial_sum) {
        PartialSumOptions o;
        o.eps = parse_rational(f.eps);
        unsigned ell = f.ell != 0 ? f.ell : std::max(1u, ceil_log2(input.universe));
        auto p = choose_partial_sum_params(input.values.size(), ell, f.t, o);
        return PartialSumStructure::build(input.values, p);
    }
    ParamOptions o;
    o.eps = parse_rational(f.eps);
    o.alpha_min = parse_rational(f.alpha_min);
    o.l_thresh = f.l_thresh;
    o.t_inner = f.t_inner;
    if (!f.eps_inner.empty()) o.eps_inner = parse_rational(f.eps_inner);
    FidParams p = choose_params(input.universe, input.values.size(), f.t, o);
    if (kind == FidKind::select_dict) return SelectDict::build(input.values, p);
    return FidCore::build(input.values, p, kind);
}

std::string answer(const Container& c, const std::string& op, std::uint64_t arg, QueryStats* st) {
    if (op == "rank") {
        auto f = std::get_if<FidCore>(&c.body);
        if (!f) return "error: unsupported";
        return std::to_string(f->rank(arg, st));
    }
    if (op == "select") {
        if (auto f = std::get_if<FidCore>(&c.body)) return std::to_string(f->select(arg, st));
        if (auto d = std::get_if<SelectDict>(&c.body)) return std::to_string(d->select(arg, st));
        return "error: unsupported";
    }
    if (op == "psum") {
        auto ps = std::get_if<PartialSumStructure>(&c.body);
        if (!ps) return "error: unsupported";
        return std::to_string(ps->prefix_sum(arg, st));
    }
    return "error: unknown query '" + op + "'";
}

std::string answer_line(const Container& c, const std::string& line) {
    std::istringstream in(line);
    std::string op, arg, extra;
    if (!(in >> op >> arg) || (in >> extra)) return "error: malformed line";
    try {
        return answer(c, op, parse_u64(arg), nullptr);
    } catch (const std::invalid_argument&) {
        return "error: malformed line";
    } catch (const std::out_of_range&) {
        return "error: malformed line";
    } catch (const Error& e) {
        return std::string("error: ") + e.what();
    }
}

std::uint64_t element_count(const Container& c) {
    return std::visit([](const auto& s) { return s.params().n; }, c.body);
}

void print_report(const json& j, const std::string& format, std::ostream& os) {
    if (format == "csv") {
        os << "name,measured,limit,ok\n";
        for (const auto& b : j["budgets"]) {
            os << b["name"].get<std::string>() << ',' << b["measured"].get<double>() << ','
               << b["limit"].get<double>() << ',' << (b["ok"].get<bool>() ? "true" : "false") << '\n';
        }
        return;
    }
    os << j.dump(2) << '\n';
}

int cmd_gen(const std::string& dist, const std::string& universe, const std::string& n, std::uint64_t seed,
            const std::string& out) {
    KeyFile k;
    k.universe = parse_u64(universe);
    k.values = generate_keys(parse_dist(dist), k.universe, parse_u64(n), seed);
    write_key_file(out, k);
    return 0;
}

int cmd_build(const BuildFlags& f) {
    bool sorted = parse_kind(f.kind) != FidKind::partial_sum;
    KeyFile input = read_key_file(f.keys, sorted);
    Container c = make_container(build_structure(f, input));
    save_container(f.out, c);
    return 0;
}

int cmd_query(const std::string& path, const std::string& queries, const std::string& out) {
    Container c = load_container(path);
    std::ifstream in(queries);
    if (!in) throw FormatError("cannot open " + queries);
    std::ofstream file;
    if (!out.empty()) {
        file.open(out, std::ios::trunc);
        if (!file) throw FormatError("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        os << answer_line(c, line) << '\n';
    }
    return 0;
}

int cmd_audit(const std::string& path, const std::string& format) {
    Container c = load_container(path);
    SpaceReport r = audit_structure(c.body);
    json j = r.to_json();
    j["stored_audit_matches"] = (json::parse(c.audit) == j);
    print_report(j, format, std::cout);
    return r.ok() ? 0 : kExitBudget;
}

json run_bench(const Container& c, std::uint64_t queries, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uint64_t n = element_count(c);
    json out;
    out["kind"] = kind_name(c.kind);
    auto stage = [&](const std::string& op, auto draw) {
        StatsSummary sum;
        auto t0 = std::chrono::steady_clock::now();
        for (std::uint64_t q = 0; q < queries; ++q) {
            QueryStats st;
            answer(c, op, draw(), &st);
            sum.add(st);
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json j = stats_json(sum);
        j["seconds"] = secs;
        out[op] = j;
    };
    if (auto f = std::get_if<FidCore>(&c.body)) {
        std::uint64_t universe = f->params().universe;
        stage("rank", [&] { return rng() % universe; });
        stage("select", [&] { return 1 + rng() % n; });
        out["budgets"] = {{"tree_visits_rank", 2 * (f->params().t + 1)},
                          {"tree_visits_select", f->params().t + 1},
                          {"pred_peak", sparse_probe_budget(universe)},
                          {"low_comparisons", ceil_log2(std::max<std::uint64_t>(f->params().l_thresh, 1)) + 1}};
    } else if (auto d = std::get_if<SelectDict>(&c.body)) {
        stage("select", [&] { return 1 + rng() % n; });
        out["budgets"] = {{"tree_visits_select", d->params().t + 1}, {"pred_peak", dense_probe_budget(d->params().t)}};
    } else {
        const auto& ps = std::get<PartialSumStructure>(c.body);
        stage("psum", [&] { return 1 + rng() % n; });
        out["budgets"] = {{"tree_visits_psum", ps.params().t + 1}};
    }
    return out;
}

int cmd_bench(const std::string& path, std::uint64_t queries, std::uint64_t seed, const std::string& format) {
    Container c = load_container(path);
    json j = run_bench(c, queries, seed);
    if (format == "csv") {
        std::cout << "op,stage,max,mean\n";
        for (const char* op : {"rank", "select", "psum"}) {
            if (!j.contains(op)) continue;
            for (const auto& s : j[op]["stages"]) {
                std::cout << op << ',' << s["stage"].get<std::string>() << ',' << s["max"].get<std::uint64_t>() << ','
                          << s["mean"].get<double>() << '\n';
            }
        }
    } else {
        std::cout << j.dump(2) << '\n';
    }
    return 0;
}

// Redundancy and probe maxima across t on one key set.
int cmd_tradeoff(const std::string& dist, const std::string& universe, const std::string& n, std::uint64_t seed,
                 const std::vector<unsigned>& ts, BuildFlags f, std::uint64_t queries, const std::string& out) {
    KeyFile input;
    input.universe = parse_u64(universe);
    input.values = generate_keys(parse_dist(dist), input.universe, parse_u64(n), seed);
    std::ofstream file;
    if (!out.empty()) {
        file.open(out, std::ios::trunc);
        if (!file) throw FormatError("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "kind,U,n,t,B,h,b,payload_bits,optimum_bits,redundancy_bits,table_bits,budget_ok,"
          "rank_tree_visits_max,select_tree_visits_max,pred_peak_max\n";
    for (unsigned t : ts) {
        f.t = t;
        Container c = make_container(build_structure(f, input));
        SpaceReport r = audit_structure(c.body);
        json bench = run_bench(c, queries, seed + t);
        auto stat = [&](const char* op, const char* stage) -> std::string {
            if (!bench.contains(op)) return "";
            for (const auto& s : bench[op]["stages"]) {
                if (s["stage"] == stage) return std::to_string(s["max"].get<std::uint64_t>());
            }
            return "";
        };
        std::uint64_t peak = 0;
        for (const char* op : {"rank", "select", "psum"}) {
            if (auto v = stat(op, "pred_peak"); !v.empty()) peak = std::max<std::uint64_t>(peak, std::stoull(v));
        }
        auto params = std::visit(
            [](const auto& s) {
                const auto& p = s.params();
                if constexpr (requires { p.b; }) {
                    return std::vector<std::uint64_t>{p.branching, p.h, p.b};
                } else {
                    return std::vector<std::uint64_t>{p.branching, p.h, p.low_bits()};
                }
            },
            c.body);
        os << r.kind << ',' << input.universe << ',' << input.values.size() << ',' << t << ',' << params[0] << ','
           << params[1] << ',' << params[2] << ',' << r.payload_bits << ',' << r.optimum << ',' << r.redundancy << ','
           << r.table_bits << ',' << (r.ok() ? "true" : "false") << ',' << stat("rank", "tree_visits") << ','
           << stat("select", "tree_visits") << ',' << peak << '\n';
    }
    return 0;
}

void add_build_flags(CLI::App* app, BuildFlags& f) {
    app->add_option("--kind", f.kind, "fid-basic | fid-advanced | select-dict | partial-sum")->capture_default_str();
    app->add_option("--t", f.t, "aB-tree height")->capture_default_str();
    app->add_option("--eps", f.eps, "rational eps, e.g. 1/4")->capture_default_str();
    app->add_option("--alpha-min", f.alpha_min, "density exponent: U >= n^(1+alpha)")->capture_default_str();
    app->add_option("--l-thresh", f.l_thresh, "longest interval kept as a sorted array (0: ceil(log2 U))");
    app->add_option("--t-inner", f.t_inner, "embedded FID tree height (0: h)");
    app->add_option("--eps-inner", f.eps_inner, "embedded FID eps (recorded only)");
    app->add_option("--ell", f.ell, "partial-sum entry width (0: ceil(log2 U) of the input file)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Succinct fully indexable dictionaries: build, query, audit"};
    app.require_subcommand(1);

    std::string dist = "uniform", universe, count, out, in, queries_path, format = "json";
    std::uint64_t seed = 1, queries = 10000;
    BuildFlags bf;
    std::vector<unsigned> ts{1, 2, 3};

    auto* gen = app.add_subcommand("gen", "write a sorted key file");
    gen->add_option("--dist", dist, "uniform | clustered | dense-blocks")->capture_default_str();
    gen->add_option("--U", universe, "universe size (integer or 2^k)")->required();
    gen->add_option("--n", count, "number of keys")->required();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--out", out)->required();

    auto* build = app.add_subcommand("build", "build a structure into a container file");
    add_build_flags(build, bf);
    build->add_option("keys", bf.keys, "key file")->required();
    build->add_option("--out", bf.out)->required();

    auto* query = app.add_subcommand("query", "answer 'rank x' | 'select i' | 'psum i' lines");
    query->add_option("container", in)->required();
    query->add_option("queries", queries_path)->required();
    query->add_option("--out", out, "results file (default stdout)");

    auto* audit = app.add_subcommand("audit", "space report; exit 1 if a budget is exceeded");
    audit->add_option("container", in)->required();
    audit->add_option("--report", format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    auto* bench = app.add_subcommand("bench", "probe counts over random queries");
    bench->add_option("container", in)->required();
    bench->add_option("--queries", queries)->capture_default_str();
    bench->add_option("--seed", seed)->capture_default_str();
    bench->add_option("--report", format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    auto* trade = app.add_subcommand("tradeoff", "CSV of redundancy and probes across t");
    add_build_flags(trade, bf);
    trade->add_option("--dist", dist)->capture_default_str();
    trade->add_option("--U", universe)->required();
    trade->add_option("--n", count)->required();
    trade->add_option("--seed", seed)->capture_default_str();
    trade->add_option("--t-list", ts, "values of t")->delimiter(',')->capture_default_str();
    trade->add_option("--queries", queries)->capture_default_str();
    trade->add_option("--out", out, "CSV file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(dist, universe, count, seed, out);
        if (*build) return cmd_build(bf);
        if (*query) return cmd_query(in, queries_path, out);
        if (*audit) return cmd_audit(in, format);
        if (*bench) return cmd_bench(in, queries, seed, format);
        if (*trade) return cmd_tradeoff(dist, universe, count, seed, ts, bf, queries, out);
    } catch (const Error& e) {
        std::cerr << "sfid: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "sfid: " << e.what() << '\n';
        return kExitError;
    }
    return 0;
}
