#include "negcq/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace negcq::cli {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::usage: return 2;
        case ErrorKind::budget: return 3;
        default: return 4;
    }
}

std::string read_query_text(const std::string& arg) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(arg, ec)) {
        std::ifstream in(arg);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    return arg;
}

Database load_database(const std::string& dir, const QueryIR& ir, char delim) {
    const auto tables = read_csv_dir(dir, delim);
    return encode_database(tables, bind_domains(ir, tables));
}

namespace {

std::string str(const Rational& r) { return to_string(r); }
std::string str(const BigInt& b) { return b.str(); }

// Dictionary of a variable: the first positive atom column (or dom source) that binds it.
int var_dict(const QueryIR& ir, const Database& db, Var v) {
    for (const Atom& a : ir.positive_atoms)
        for (std::size_t i = 0; i < a.vars.size(); ++i)
            if (a.vars[i] == v) return db.domain_of(a.relation, i);
    if (auto it = ir.domain_decls.find(v); it != ir.domain_decls.end())
        return db.domain_of(it->second.relation, static_cast<std::size_t>(resolve_dom_column(db, it->second)));
    for (const auto& [u, rel] : ir.singleton_filters)
        if (u == v) return db.domain_of(rel, 0);
    throw RangeRestrictionError("variable " + ir.name(v) + " has no binding column");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

Json names(const QueryIR& ir, const std::vector<Var>& vs) {
    Json a = Json::array();
    for (Var v : vs) a.push_back(ir.name(v));
    return a;
}

Json width_json(const QueryIR& ir, const Hypergraph& H, const VertexOrdering& sigma, const WidthEstimate& w) {
    Json j;
    j["sigma"] = names(ir, sigma.sigma);
    j["fhtw_F"] = str(w.value);
    j["optimal"] = w.optimal;
    Json steps = Json::array();
    const auto seq = elimination_sequence(H, sigma);
    for (std::size_t i = 0; i < seq.size() && i < w.certificate.size(); ++i) {
        Json s;
        s["eliminate"] = ir.name(seq[i].vertex);
        s["J"] = names(ir, seq[i].J);
        s["rho"] = str(w.certificate[i].rho);
        steps.push_back(s);
    }
    j["steps"] = steps;
    return j;
}

struct Common {
    std::string db, query, strategy = "tensor", family_mode = "random", report, out, report_out, delim = ",";
    std::uint64_t seed = 0;
    bool no_timings = false, no_prune = false, no_symmetry = false, no_merge = false, no_early_exit = false;
    double size_multiplier = 1.0;
    EngineConfig cfg;
};

void add_budgets(CLI::App* app, EngineConfig& cfg) {
    ColorBudgets& b = cfg.color;
    app->add_option("--budget-quotient", b.quotient_cap, "max |U| for partition enumeration");
    app->add_option("--budget-colorings", b.coloring_cap, "max proper colorings listed");
    app->add_option("--budget-verify-exhaustive", b.verify_exhaustive, "N^|U| limit for exhaustive coverage checks");
    app->add_option("--budget-verify-samples", b.verify_samples, "samples for non-exhaustive coverage checks");
    app->add_option("--budget-retries", b.retries, "resampling attempts for random families");
    app->add_option("--budget-inner", b.inner_verify, "q^|U| limit for explicit inner families");
    app->add_option("--budget-confidence-bits", b.confidence_bits, "extra size slack when coverage is sampled");
    app->add_option("--budget-disjunct-verify", b.disjunct_verify, "max N for exhaustive disjunct-matrix checks");
    app->add_option("--budget-greedy-work", b.greedy_work, "max candidates x colorings for greedy cover");
    app->add_option("--budget-bits", cfg.bit_budget, "max bits per BitVector run (larger ranks are chunked)");
    app->add_option("--budget-rank", cfg.rank_cap, "max tensor rank before NAE atoms are checked directly");
    app->add_option("--budget-ordering", cfg.ordering_cap, "max variables for exact ordering search");
    app->add_option("--budget-naive", cfg.naive_budget, "max nodes for the naive oracle");
    app->add_option("--budget-disjuncts", cfg.disjunct_cap, "max disjuncts enumerated");
}

void add_engine(CLI::App* app, Common& c) {
    app->add_option("--strategy", c.strategy, "tensor|colors-join|naive")->check(CLI::IsMember({"tensor", "colors-join", "naive"}));
    app->add_option("--family-mode", c.family_mode, "random|greedy|explicit")->check(CLI::IsMember({"random", "greedy", "explicit"}));
    app->add_option("--seed", c.seed, "root seed");
    app->add_option("--size-multiplier", c.size_multiplier, "scale the family-size bound");
    app->add_flag("--no-prune", c.no_prune, "disable unary-consistency disjunct pruning");
    app->add_flag("--no-symmetry", c.no_symmetry, "disable forbidden-spectrum pruning (colors-join)");
    app->add_flag("--no-merge", c.no_merge, "disable pendant-variable merging");
    app->add_flag("--no-early-exit", c.no_early_exit, "evaluate every disjunct of a Boolean query");
    add_budgets(app, c.cfg);
}

EngineConfig finish_config(const Common& c) {
    EngineConfig cfg = c.cfg;
    cfg.strategy = c.strategy == "naive" ? Strategy::naive : c.strategy == "colors-join" ? Strategy::colors_join : Strategy::tensor;
    cfg.family_mode = c.family_mode == "greedy" ? FamilyMode::greedy : c.family_mode == "explicit" ? FamilyMode::explicit_code : FamilyMode::random;
    cfg.seed = c.seed;
    cfg.size_multiplier = c.size_multiplier;
    cfg.prune_disjuncts = !c.no_prune;
    cfg.symmetric_prune = !c.no_symmetry;
    cfg.merge_pendants = !c.no_merge;
    cfg.early_exit = !c.no_early_exit;
    return cfg;
}

char delim_of(const std::string& d) {
    if (d == "\\t" || d == "tab") return '\t';
    if (d.size() != 1) throw ParameterError("delimiter must be one character");
    return d[0];
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParameterError("cannot write " + path);
    f << text;
}

// ---------------------------------------------------------------- run

int cmd_run(const Common& c, std::ostream& out, std::ostream& err) {
    if (c.query.empty()) throw ParameterError("--query is required");
    if (c.db.empty()) throw ParameterError("--db is required");
    const QueryIR ir = parse_query(read_query_text(c.query));
    const Database db = load_database(c.db, ir, delim_of(c.delim));
    const Answer ans = answer_query(ir, db, finish_config(c));
    write_text(c.out, answers_csv(ir, db, ans), out);
    if (c.report == "json") write_text(c.report_out, report_json(ir, db, ans, !c.no_timings).dump(2) + "\n", err);
    return 0;
}

// ---------------------------------------------------------------- plan

std::string color_plan_text(const QueryIR& d, const Database* db, const std::vector<Var>& forced, const EngineConfig& cfg) {
    (void)db;
    std::ostringstream o;
    if (d.nae_atoms.empty()) {
        o << "  no NAE atoms: colors-join plan equals the plain plan\n";
        return o.str();
    }
    const Hypergraph G = [&] {
        Hypergraph g;
        for (const auto& e : d.nae_atoms) g.add_edge(std::vector<int>(e.begin(), e.end()));
        return g;
    }();
    const ColorCount cc = color_count(G, cfg.color);
    const ColorJoinIR cj = colors_as_join(d, cc.c, nullptr);
    auto nm = [&](int v) { return cj.is_color(v) ? "C" + d.name(cj.input_of.at(v)) : d.name(v); };
    VertexOrdering sigma;
    if (!forced.empty()) sigma.sigma = forced;
    else sigma = plan_ordering(cj.H, d.free_vars, cfg.ordering_cap).first;
    const TreeDecomposition td = ordering_to_tree_decomposition(cj.H, sigma, d.free_vars);
    const TreeDecomposition am = color_amendment(td, cj.color_edges, cj.input_of);
    o << "  c = " << cc.c << "\n  amended tree decomposition:\n";
    for (std::size_t b = 0; b < am.bags.size(); ++b) {
        o << "    bag " << b + 1 << " {";
        for (std::size_t i = 0; i < am.bags[b].size(); ++i) o << (i ? ", " : "") << nm(am.bags[b][i]);
        o << "} parent " << (am.parent[b] < 0 ? std::string("-") : std::to_string(am.parent[b] + 1)) << "\n";
    }
    const VertexOrdering pi = td_to_ordering(am, cj, d.free_vars);
    const ColorCost cost = io_color_cost(cj, pi);
    o << "  pi = ";
    for (std::size_t i = 0; i < pi.sigma.size(); ++i) o << (i ? " " : "") << nm(pi.sigma[i]);
    o << "\n  Z | J | J|_V | J|_U | cost\n";
    auto list = [&](const std::vector<int>& vs) {
        std::string s = "{";
        for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + nm(vs[i]);
        return s + "}";
    };
    for (const auto& s : cost.steps)
        o << "  " << nm(s.vertex) << " | " << list(s.J) << " | " << list(s.J_input) << " | " << list(s.J_color) << " | "
          << ColorCost::term(s.n_exponent, s.c_exponent) << "\n";
    o << "  max step cost: " << cost.max_term() << "\n";
    return o.str();
}

std::string plain_plan_text(const QueryIR& q, const std::vector<Var>& forced, const EngineConfig& cfg, Json* js) {
    std::ostringstream o;
    const Hypergraph H = atom_hypergraph(q);
    VertexOrdering sigma;
    WidthEstimate w;
    if (!forced.empty()) {
        sigma.sigma = forced;
        if (!sigma.has_f_prefix(q.free_vars)) throw PlanError("--ordering must list the free variables first");
        w = induced_fhtw(H, sigma);
        w.optimal = false;
    } else {
        std::tie(sigma, w) = plan_ordering(H, q.free_vars, cfg.ordering_cap);
    }
    o << "  sigma = ";
    for (std::size_t i = 0; i < sigma.sigma.size(); ++i) o << (i ? " " : "") << q.name(sigma.sigma[i]);
    o << "\n";
    const auto seq = elimination_sequence(H, sigma);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        o << "  eliminate " << q.name(seq[i].vertex) << ": bag {";
        for (std::size_t k = 0; k < seq[i].J.size(); ++k) o << (k ? ", " : "") << q.name(seq[i].J[k]);
        o << "} rho* = " << str(w.certificate[i].rho) << "\n";
    }
    const TreeDecomposition td = ordering_to_tree_decomposition(H, sigma, q.free_vars);
    o << "  tree decomposition:";
    for (std::size_t b = 0; b < td.bags.size(); ++b) {
        o << " {";
        for (std::size_t k = 0; k < td.bags[b].size(); ++k) o << (k ? "," : "") << q.name(td.bags[b][k]);
        o << "}";
    }
    o << "\n  fhtw_F = " << str(w.value) << (w.optimal ? " (optimal)" : " (heuristic ordering)") << "\n";
    if (js) *js = width_json(q, H, sigma, w);
    return o.str();
}

std::vector<Var> parse_ordering(const QueryIR& q, const std::string& s) {
    std::vector<Var> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (tok.empty()) continue;
        auto v = q.find_var(tok);
        if (!v) throw UnknownVariable(tok);
        out.push_back(*v);
    }
    return out;
}

int cmd_plan(const Common& c, const std::string& ordering, std::size_t max_disjuncts, std::ostream& out) {
    if (c.query.empty()) throw ParameterError("--query is required");
    const QueryIR ir = parse_query(read_query_text(c.query));
    const EngineConfig cfg = finish_config(c);
    QueryIR body = ir;
    body.negated_atoms.clear();
    body.nae_atoms.clear();
    const std::vector<Var> forced = parse_ordering(ir, ordering);
    Json js;
    const std::string text = plain_plan_text(body, forced, cfg, &js);
    if (c.report == "json" && cfg.strategy != Strategy::colors_join) {
        Json j{{"schema", 1}, {"query", print_query(ir)}};
        for (auto& [k, v] : js.items()) j[k] = v;
        out << j.dump(2) << "\n";
        return 0;
    }
    out << "query: " << print_query(ir) << "\nbody plan:\n" << text;
    if (cfg.strategy != Strategy::colors_join) return 0;
    std::vector<QueryIR> targets;
    if (ir.negated_atoms.empty()) {
        targets.push_back(ir);
    } else {
        if (c.db.empty()) throw ParameterError("--db is required to untangle negated atoms for a colors-join plan");
        Database db = load_database(c.db, ir, delim_of(c.delim));
        const QueryIR v = validate_query(ir, db);
        const UntangledQuery u = untangle_query(v, db, false);
        u.enumerate([&](const std::vector<std::size_t>& ch) {
            QueryIR d = u.disjunct(ch);
            if (!detail::merge_pendants(d, db) || d.nae_atoms.empty()) return true;
            targets.push_back(d);
            return targets.size() < max_disjuncts;
        });
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out << "colors-join plan " << i + 1 << ": " << print_query(targets[i]) << "\n";
        out << color_plan_text(targets[i], nullptr, targets.size() == 1 && ir.negated_atoms.empty() ? forced : std::vector<Var>{}, cfg);
    }
    return 0;
}

// ---------------------------------------------------------------- rewrite

int cmd_rewrite(const Common& c, std::ostream& out) {
    if (c.query.empty() || c.db.empty()) throw ParameterError("--query and --db are required");
    const QueryIR ir = parse_query(read_query_text(c.query));
    Database db = load_database(c.db, ir, delim_of(c.delim));
    const QueryIR v = validate_query(ir, db);
    const UntangledQuery u = untangle_query(v, db, false);
    out << "B = " << u.B << "\nbound = " << u.bound << "\n";
    for (std::size_t a = 0; a < u.matchings.size(); ++a)
        out << "negated atom " << a + 1 << ": degree " << u.degrees[a] << ", matchings " << u.matchings[a] << "\n";
    u.enumerate([&](const std::vector<std::size_t>& ch) {
        QueryIR d = u.disjunct(ch);
        d.head_name = "Q_" + detail::choice_label(ch);
        out << print_query(d) << "\n";
        return true;
    });
    for (const std::string& name : u.generated) {
        const Relation& r = db.relation(name);
        out << "% " << name << " = {";
        for (std::size_t t = 0; t < r.tuples.size(); ++t) {
            out << (t ? ", " : "") << "(";
            for (std::size_t k = 0; k < r.tuples[t].size(); ++k)
                out << (k ? "," : "") << db.decode(db.domain_of(name, k), r.tuples[t][k]);
            out << ")";
        }
        out << "}\n";
    }
    return 0;
}

// ---------------------------------------------------------------- family

int cmd_family(const std::string& structure, std::size_t colors, std::size_t N, const Common& c, const std::string& sidecar,
               std::ostream& out, std::ostream& err) {
    if (structure.empty()) throw ParameterError("--structure is required");
    if (N == 0) throw ParameterError("--N must be positive");
    std::string text = read_query_text(structure);
    if (text.find(":-") == std::string::npos) {
        while (!text.empty() && (std::isspace(static_cast<unsigned char>(text.back())) || text.back() == '.')) text.pop_back();
        text = "F() :- " + text + ".";
    }
    const QueryIR q = detail::Parser(text).run();
    if (q.nae_atoms.empty()) throw ParameterError("structure has no NAE atoms");
    Hypergraph G;
    for (const auto& e : q.nae_atoms) G.add_edge(std::vector<int>(e.begin(), e.end()));
    const LocalGraph g(G);
    const EngineConfig cfg = finish_config(c);
    const ColorCount cc = color_count(g, cfg.color);
    const std::size_t col = colors ? colors : cc.c;
    if (col < cc.c) err << "warning: --colors " << col << " is below c = " << cc.c << "; coverage may be impossible\n";
    Rational th;
    std::vector<Rational> p = col == cc.c ? default_distribution(g, col, th, cfg.color) : uniform_distribution(col);
    if (col != cc.c) th = theta(g, col, p, cfg.color);
    FamilyCache cache;
    std::string note;
    EngineConfig fc = cfg;
    const auto fam = build_family(g, col, p, N, fc, cache, note);
    std::ostringstream csv;
    for (std::size_t f = 0; f < fam->size(); ++f) {
        const auto row = fam->row(f);
        for (std::size_t x = 0; x < N; ++x) csv << (x ? "," : "") << static_cast<int>(row[x]);
        csv << "\n";
    }
    write_text(c.out, csv.str(), out);
    const CoverageCheck chk = verify_coverage(g, *fam, N, cfg.color, stream_seed(c.seed, "family-verify"));
    Json j;
    j["schema"] = 1;
    j["structure"] = print_query(detail::canonicalize(q));
    j["vertices"] = names(q, G.vertices);
    j["N"] = N;
    j["c"] = col;
    j["F"] = fam->size();
    j["r"] = str(chromatic_polynomial(g, col, cfg.color) * fam->size());
    j["theta"] = str(th);
    Json pj = Json::array();
    for (const Rational& x : p) pj.push_back(str(x));
    j["p"] = pj;
    j["provenance"] = fam->provenance;
    j["certification"] = fam->certification;
    j["verified"] = chk.ok;
    j["verification"] = chk.level();
    j["mode"] = c.family_mode;
    j["seed"] = c.seed;
    if (!note.empty()) j["note"] = note;
    std::string path = sidecar;
    if (path.empty() && !c.out.empty() && c.out != "-") path = c.out + ".json";
    write_text(path, j.dump(2) + "\n", err);
    if (!chk.ok) throw ConstructionBug("constructed family failed its coverage check");
    return 0;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const Common& c, std::size_t N, std::size_t y_domain, std::size_t repeat, std::ostream& out) {
    if (N == 0) throw ParameterError("--N must be positive");
    EngineConfig cfg = finish_config(c);
    cfg.early_exit = false;
    const QueryIR ir = parse_query(query_c_text());
    Json runs = Json::array();
    std::vector<double> best;
    for (std::size_t n : {N, 2 * N}) {
        const Database db = query_c_database(n, y_domain);
        double ms = 0;
        std::size_t answers = 0;
        Json last;
        for (std::size_t k = 0; k < std::max<std::size_t>(1, repeat); ++k) {
            const auto t0 = std::chrono::steady_clock::now();
            const Answer a = answer_query(ir, db, cfg);
            const double t = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            ms = k == 0 ? t : std::min(ms, t);
            answers = a.tuples.size();
            last = report_json(ir, db, a, false);
        }
        best.push_back(ms);
        Json r;
        r["N"] = n;
        r["ms"] = ms;
        r["answer"] = answers > 0;
        r["B"] = last["B"];
        r["work_Br"] = last["work_Br"];
        runs.push_back(r);
    }
    Json j;
    j["schema"] = 1;
    j["workload"] = "query-c";
    j["query"] = query_c_text();
    j["strategy"] = c.strategy;
    j["y_domain"] = y_domain;
    j["repeat"] = repeat;
    j["runs"] = runs;
    j["ratio"] = best[0] > 0 ? best[1] / best[0] : 0.0;
    out << j.dump(2) << "\n";
    return 0;
}

}  // namespace

std::string answers_csv(const QueryIR& ir, const Database& db, const Answer& ans) {
    std::ostringstream o;
    for (std::size_t i = 0; i < ans.free.size(); ++i) o << (i ? "," : "") << csv_field(ir.name(ans.free[i]));
    o << "\n";
    if (ans.free.empty()) {
        o << (ans.tuples.empty() ? "false" : "true") << "\n";
        return o.str();
    }
    std::vector<int> dicts;
    for (Var v : ans.free) dicts.push_back(var_dict(ir, db, v));
    std::vector<std::vector<std::string>> rows;
    for (const Tuple& t : ans.tuples) {
        std::vector<std::string> r;
        for (std::size_t i = 0; i < t.size(); ++i) r.push_back(db.decode(dicts[i], t[i]));
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << csv_field(r[i]);
        o << "\n";
    }
    return o.str();
}

Json report_json(const QueryIR& ir, const Database& db, const Answer& ans, bool timings) {
    const RunReport& r = ans.report;
    Json j;
    j["schema"] = 1;
    j["query"] = print_query(ir);
    j["strategy"] = r.strategy;
    j["family_mode"] = r.family_mode;
    j["seed"] = r.seed;
    j["free"] = names(ir, ans.free);
    j["answers"] = ans.tuples.size();
    {
        QueryIR body = validate_query(ir, db);
        body.negated_atoms.clear();
        body.nae_atoms.clear();
        const Hypergraph H = atom_hypergraph(body);
        EngineConfig cfg;
        const auto [sigma, w] = plan_ordering(H, body.free_vars, cfg.ordering_cap);
        j["plan"] = width_json(body, H, sigma, w);
    }
    j["B"] = str(r.B);
    j["bound"] = str(r.bound);
    j["matchings"] = r.matchings;
    j["degrees"] = r.degrees;
    j["disjuncts_enumerated"] = r.enumerated;
    j["disjuncts_pruned"] = r.pruned;
    j["disjuncts_empty_after_merge"] = r.empty_after_merge;
    j["disjuncts_evaluated"] = r.evaluated;
    j["early_exit"] = r.early_exit;
    j["work_Br"] = str(r.work);
    Json ds = Json::array();
    for (const DisjunctReport& d : r.disjuncts) {
        Json x;
        x["choice"] = d.choice;
        x["strategy"] = d.strategy;
        x["fhtw_F"] = str(d.fhtw);
        x["fhtw_optimal"] = d.fhtw_optimal;
        x["U"] = d.U;
        x["N"] = d.N;
        x["c"] = d.c;
        x["theta"] = str(d.theta);
        x["F"] = d.family_size;
        x["r"] = d.rank;
        x["chunks"] = d.chunks;
        x["colored_nae"] = d.colored_nae;
        x["direct_nae"] = d.direct_nae;
        x["provenance"] = d.provenance;
        x["certification"] = d.certification;
        if (!d.note.empty()) x["note"] = d.note;
        x["tuples"] = d.tuples;
        if (timings) x["ms"] = d.ms;
        ds.push_back(x);
    }
    j["disjuncts"] = ds;
    if (timings) j["ms"] = r.ms;
    return j;
}

Database query_c_database(std::size_t N, std::size_t y_domain) {
    if (y_domain == 0) throw ParameterError("y domain must be positive");
    std::vector<Tuple> R, S, T;
    for (std::size_t i = 0; i < N; ++i) {
        const Value x = static_cast<Value>(i);
        R.push_back({x, static_cast<Value>(i % y_domain)});
        S.push_back({static_cast<Value>(i % y_domain), x});
        T.push_back({x, x});
        if (i + 1 < N) T.push_back({x, x + 1});
    }
    Database db;
    db.add_relation("R", 2, std::move(R));
    db.add_relation("S", 2, std::move(S));
    db.add_relation("T", 2, std::move(T));
    return db;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"negcq: conjunctive queries with negated bounded-degree atoms"};
    app.require_subcommand(1);
    Common c;
    std::string ordering, structure, sidecar;
    std::size_t max_disjuncts = 4, colors = 0, N = 0, y_domain = 5, repeat = 3;

    auto* run = app.add_subcommand("run", "evaluate a query over a CSV database");
    run->add_option("--db", c.db, "directory of CSV files");
    run->add_option("--query", c.query, "query file or inline text");
    run->add_option("--report", c.report, "json")->check(CLI::IsMember({"json"}));
    run->add_option("--out", c.out, "answer CSV path (default stdout)");
    run->add_option("--report-out", c.report_out, "report path (default stderr)");
    run->add_option("--delim", c.delim, "CSV delimiter");
    run->add_flag("--no-timings", c.no_timings, "omit wall-clock fields from the report");
    add_engine(run, c);

    auto* plan = app.add_subcommand("plan", "print orderings, bags, per-bag rho* and fhtw_F");
    plan->add_option("--db", c.db, "directory of CSV files (needed to untangle for colors-join)");
    plan->add_option("--query", c.query, "query file or inline text");
    plan->add_option("--ordering", ordering, "comma-separated variable ordering (free variables first)");
    plan->add_option("--max-disjuncts", max_disjuncts, "colors-join plans shown for negated queries");
    plan->add_option("--report", c.report, "json")->check(CLI::IsMember({"json"}));
    plan->add_option("--delim", c.delim, "CSV delimiter");
    add_engine(plan, c);

    auto* rewrite = app.add_subcommand("rewrite", "print the untangled disjuncts, B and the disjunct bound");
    rewrite->add_option("--db", c.db, "directory of CSV files");
    rewrite->add_option("--query", c.query, "query file or inline text");
    rewrite->add_option("--delim", c.delim, "CSV delimiter");

    auto* family = app.add_subcommand("family", "construct a color family for an NAE structure");
    family->add_option("--structure", structure, "NAE atoms, e.g. \"NAE(A,B,C), A != D\", or a query");
    family->add_option("--colors", colors, "number of colors (default: c of the structure)");
    family->add_option("--N", N, "domain size");
    family->add_option("--mode", c.family_mode, "random|greedy|explicit")->check(CLI::IsMember({"random", "greedy", "explicit"}));
    family->add_option("--seed", c.seed, "root seed");
    family->add_option("--size-multiplier", c.size_multiplier, "scale the family-size bound");
    family->add_option("--out", c.out, "CSV path (default stdout)");
    family->add_option("--sidecar", sidecar, "JSON sidecar path (default <out>.json, or stderr)");
    add_budgets(family, c.cfg);

    auto* bench = app.add_subcommand("bench", "time the query-C workload at N and 2N");
    bench->add_option("--N", N, "base size");
    bench->add_option("--y-domain", y_domain, "size of the join variable's domain");
    bench->add_option("--repeat", repeat, "repetitions per size (minimum is reported)");
    add_engine(bench, c);

    auto error_json = [&](const std::string& type, const std::string& kind, const std::string& msg) {
        err << Json{{"schema", 1}, {"error", {{"type", type}, {"kind", kind}, {"message", msg}}}}.dump() << "\n";
    };
    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            error_json("UsageError", "usage", e.what());
            return 2;
        }
        if (run->parsed()) return cmd_run(c, out, err);
        if (plan->parsed()) return cmd_plan(c, ordering, max_disjuncts, out);
        if (rewrite->parsed()) return cmd_rewrite(c, out);
        if (family->parsed()) return cmd_family(structure, colors, N, c, sidecar, out, err);
        if (bench->parsed()) return cmd_bench(c, N ? N : 10000, y_domain, repeat, out);
        return 2;
    } catch (const Error& e) {
        const char* kinds[] = {"usage", "budget", "internal"};
        error_json(e.name(), kinds[static_cast<int>(e.kind())], e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        error_json("InternalError", "internal", e.what());
        return 4;
    }
}

}  // namespace negcq::cli
