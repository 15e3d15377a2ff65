#pragma once

#include "negcq/error.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace negcq {

using Var = int;
using Value = std::int32_t;
using Tuple = std::vector<Value>;

// ---------------------------------------------------------------- relations

struct Relation {
    std::string name;
    std::vector<Var> schema;
    std::vector<Tuple> tuples;  // sorted, duplicate-free

    Relation() = default;
    Relation(std::string n, std::vector<Var> s, std::vector<Tuple> t)
        : name(std::move(n)), schema(std::move(s)), tuples(std::move(t)) {
        for (const Tuple& row : tuples)
            if (row.size() != schema.size())
                throw ArityMismatch("relation " + name + " has a tuple of arity " +
                                    std::to_string(row.size()) + ", expected " +
                                    std::to_string(schema.size()));
        std::sort(tuples.begin(), tuples.end());
        tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
    }

    // Positional schema 0..k-1, used for stored relations.
    static Relation stored(std::string n, std::size_t arity, std::vector<Tuple> t) {
        std::vector<Var> s(arity);
        for (std::size_t i = 0; i < arity; ++i) s[i] = static_cast<Var>(i);
        return Relation(std::move(n), std::move(s), std::move(t));
    }

    std::size_t arity() const { return schema.size(); }
    std::size_t size() const { return tuples.size(); }
    bool empty() const { return tuples.empty(); }
    bool contains(const Tuple& t) const { return std::binary_search(tuples.begin(), tuples.end(), t); }

    std::set<Value> column(std::size_t i) const {
        std::set<Value> out;
        for (const Tuple& t : tuples) out.insert(t[i]);
        return out;
    }
};

// ---------------------------------------------------------------- database

struct Dictionary {
    std::string name;
    bool integer = false;  // ids are their own decimal spelling
    std::vector<std::string> values;
    std::unordered_map<std::string, Value> ids;

    Value intern(const std::string& s) {
        auto it = ids.find(s);
        if (it != ids.end()) return it->second;
        const Value id = static_cast<Value>(values.size());
        values.push_back(s);
        ids.emplace(s, id);
        return id;
    }
    void cover(Value id) {
        while (static_cast<Value>(values.size()) <= id) intern(std::to_string(values.size()));
    }
    std::size_t size() const { return values.size(); }
};

class Database {
public:
    std::map<std::string, Relation> relations;
    std::map<std::string, std::vector<std::string>> column_names;
    std::map<std::string, std::vector<int>> column_domains;  // dictionary index per column
    std::vector<Dictionary> dictionaries;
    std::size_t N = 0;

    // Integer-valued relation; all columns share one integer dictionary unless given.
    void add_relation(Relation r, std::vector<int> domains = {}) {
        if (domains.empty()) domains.assign(r.arity(), integer_domain());
        if (domains.size() != r.arity()) throw ArityMismatch("domain list for " + r.name);
        for (const Tuple& t : r.tuples)
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] < 0) throw IngestError("negative id in relation " + r.name);
                Dictionary& d = dictionaries.at(static_cast<std::size_t>(domains[i]));
                if (d.integer) d.cover(t[i]);
                else if (static_cast<std::size_t>(t[i]) >= d.size())
                    throw IngestError("id out of dictionary range in relation " + r.name);
            }
        if (!column_names.count(r.name)) {
            std::vector<std::string> names;
            for (std::size_t i = 0; i < r.arity(); ++i) names.push_back("c" + std::to_string(i + 1));
            column_names[r.name] = names;
        }
        column_domains[r.name] = std::move(domains);
        const std::string name = r.name;
        relations[name] = std::move(r);
        recompute_n();
    }

    void add_relation(const std::string& name, std::size_t arity, std::vector<Tuple> tuples) {
        add_relation(Relation::stored(name, arity, std::move(tuples)));
    }

    bool has_relation(const std::string& name) const { return relations.count(name) > 0; }

    const Relation& relation(const std::string& name) const {
        auto it = relations.find(name);
        if (it == relations.end()) throw UnknownRelation(name);
        return it->second;
    }

    int domain_of(const std::string& rel, std::size_t col) const {
        auto it = column_domains.find(rel);
        if (it == column_domains.end() || col >= it->second.size()) throw UnknownRelation(rel);
        return it->second[col];
    }

    std::string decode(int dict, Value id) const {
        const Dictionary& d = dictionaries.at(static_cast<std::size_t>(dict));
        if (id >= 0 && static_cast<std::size_t>(id) < d.size()) return d.values[static_cast<std::size_t>(id)];
        return std::to_string(id);
    }

    int integer_domain() {
        for (std::size_t i = 0; i < dictionaries.size(); ++i)
            if (dictionaries[i].integer) return static_cast<int>(i);
        Dictionary d;
        d.name = "int";
        d.integer = true;
        dictionaries.push_back(std::move(d));
        return static_cast<int>(dictionaries.size() - 1);
    }

    void recompute_n() {
        N = 0;
        for (const auto& [name, r] : relations) N = std::max(N, r.size());
    }
};

struct RawTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// (table, column index) -> domain name. Columns absent from the map get a domain of their own.
using DomainMap = std::map<std::pair<std::string, int>, std::string>;

inline Database encode_database(const std::vector<RawTable>& tables, const DomainMap& domains = {}) {
    Database db;
    std::map<std::string, int> dict_index;
    auto dict_for = [&](const std::string& domain) {
        auto it = dict_index.find(domain);
        if (it != dict_index.end()) return it->second;
        Dictionary d;
        d.name = domain;
        db.dictionaries.push_back(std::move(d));
        const int idx = static_cast<int>(db.dictionaries.size() - 1);
        dict_index.emplace(domain, idx);
        return idx;
    };
    for (const RawTable& t : tables) {
        std::vector<int> cols;
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            auto it = domains.find({t.name, static_cast<int>(c)});
            cols.push_back(dict_for(it != domains.end() ? it->second : t.name + "." + std::to_string(c)));
        }
        std::vector<Tuple> tuples;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.rows[r].size() != t.columns.size())
                throw IngestError("table " + t.name + " row " + std::to_string(r) + " has " +
                                  std::to_string(t.rows[r].size()) + " fields, expected " +
                                  std::to_string(t.columns.size()));
            Tuple row;
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                row.push_back(db.dictionaries[static_cast<std::size_t>(cols[c])].intern(t.rows[r][c]));
            tuples.push_back(std::move(row));
        }
        db.column_names[t.name] = t.columns;
        db.add_relation(Relation::stored(t.name, t.columns.size(), std::move(tuples)), cols);
    }
    return db;
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text, char delim = ',') {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') { field += '"'; ++i; }
                else quoted = false;
            } else field += ch;
            continue;
        }
        if (ch == '"') { quoted = true; any = true; }
        else if (ch == delim) { row.push_back(field); field.clear(); any = true; }
        else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) { row.push_back(field); rows.push_back(row); }
            row.clear(); field.clear(); any = false;
        } else { field += ch; any = true; }
    }
    if (quoted) throw IngestError("unterminated quote");
    if (any || !field.empty()) { row.push_back(field); rows.push_back(row); }
    return rows;
}

inline RawTable read_csv_table(const std::filesystem::path& file, char delim = ',') {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto rows = parse_csv(ss.str(), delim);
    RawTable t;
    t.name = file.stem().string();
    if (rows.empty()) throw IngestError(file.string() + " has no header row");
    t.columns = rows.front();
    t.rows.assign(rows.begin() + 1, rows.end());
    return t;
}

inline std::vector<RawTable> read_csv_dir(const std::filesystem::path& dir, char delim = ',') {
    if (!std::filesystem::is_directory(dir)) throw IngestError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<RawTable> out;
    for (const auto& f : files) out.push_back(read_csv_table(f, delim));
    return out;
}

// ---------------------------------------------------------------- hypergraph

struct Hypergraph {
    std::vector<int> vertices;             // sorted, unique
    std::vector<std::vector<int>> edges;   // each sorted, unique; multiset

    void add_vertex(int v) {
        auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
        if (it == vertices.end() || *it != v) vertices.insert(it, v);
    }
    void add_edge(std::vector<int> e) {
        std::sort(e.begin(), e.end());
        e.erase(std::unique(e.begin(), e.end()), e.end());
        for (int v : e) add_vertex(v);
        edges.push_back(std::move(e));
    }
    bool has_vertex(int v) const { return std::binary_search(vertices.begin(), vertices.end(), v); }
    bool valid() const {
        for (const auto& e : edges)
            for (int v : e)
                if (!has_vertex(v)) return false;
        return true;
    }
    std::size_t vertex_index(int v) const {
        return static_cast<std::size_t>(std::lower_bound(vertices.begin(), vertices.end(), v) - vertices.begin());
    }
};

// ---------------------------------------------------------------- semirings

struct BooleanSemiring {
    using value_type = bool;
    bool zero() const { return false; }
    bool one() const { return true; }
    bool plus(bool a, bool b) const { return a || b; }
    bool times(bool a, bool b) const { return a && b; }
    bool is_zero(bool a) const { return !a; }
};

struct NaturalCountSemiring {
    using value_type = std::uint64_t;
    std::uint64_t zero() const { return 0; }
    std::uint64_t one() const { return 1; }
    std::uint64_t plus(std::uint64_t a, std::uint64_t b) const { return a + b; }
    std::uint64_t times(std::uint64_t a, std::uint64_t b) const { return a * b; }
    bool is_zero(std::uint64_t a) const { return a == 0; }
};

using BitWords = boost::container::small_vector<std::uint64_t, 4>;

// r-bit vectors; plus = bitwise max (or), times = bitwise min (and).
struct BitVectorSemiring {
    using value_type = BitWords;
    std::size_t r = 0;

    explicit BitVectorSemiring(std::size_t bits) : r(bits) {}
    std::size_t words() const { return (r + 63) / 64; }
    BitWords zero() const { return BitWords(words(), 0); }
    BitWords one() const {
        BitWords v(words(), ~std::uint64_t{0});
        if (r % 64 != 0 && !v.empty()) v.back() = (std::uint64_t{1} << (r % 64)) - 1;
        return v;
    }
    BitWords plus(const BitWords& a, const BitWords& b) const {
        BitWords out(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] |= b[i];
        return out;
    }
    BitWords times(const BitWords& a, const BitWords& b) const {
        BitWords out(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] &= b[i];
        return out;
    }
    bool is_zero(const BitWords& a) const {
        for (std::uint64_t w : a)
            if (w) return false;
        return true;
    }
    static bool test(const BitWords& a, std::size_t bit) { return (a[bit / 64] >> (bit % 64)) & 1u; }
    static void set(BitWords& a, std::size_t bit) { a[bit / 64] |= std::uint64_t{1} << (bit % 64); }
};

// ---------------------------------------------------------------- factors

// Sparse map tuple -> value, rows sorted lexicographically, no stored zeros.
template <class V>
struct Factor {
    std::vector<Var> schema;
    std::vector<Value> keys;  // row-major, size() * arity()
    std::vector<V> values;

    std::size_t arity() const { return schema.size(); }
    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    const Value* key(std::size_t i) const { return keys.data() + i * arity(); }
    Tuple tuple(std::size_t i) const { return Tuple(key(i), key(i) + arity()); }

    template <class SR>
    static Factor build(std::vector<Var> schema, std::vector<std::pair<Tuple, V>> entries, const SR& sr) {
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        Factor f;
        f.schema = std::move(schema);
        for (std::size_t i = 0; i < entries.size();) {
            V acc = entries[i].second;
            std::size_t j = i + 1;
            for (; j < entries.size() && entries[j].first == entries[i].first; ++j)
                acc = sr.plus(acc, entries[j].second);
            if (!sr.is_zero(acc)) {
                f.keys.insert(f.keys.end(), entries[i].first.begin(), entries[i].first.end());
                f.values.push_back(std::move(acc));
            }
            i = j;
        }
        return f;
    }

    const V* find(const Tuple& t) const {
        std::size_t lo = 0, hi = size();
        const std::size_t k = arity();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (std::lexicographical_compare(key(mid), key(mid) + k, t.begin(), t.end())) lo = mid + 1;
            else hi = mid;
        }
        if (lo < size() && std::equal(key(lo), key(lo) + k, t.begin(), t.end())) return &values[lo];
        return nullptr;
    }

    std::vector<std::pair<Tuple, V>> entries() const {
        std::vector<std::pair<Tuple, V>> out;
        for (std::size_t i = 0; i < size(); ++i) out.emplace_back(tuple(i), values[i]);
        return out;
    }
};

template <class SR>
Factor<typename SR::value_type> factor_from_relation(const Relation& r, const SR& sr) {
    Factor<typename SR::value_type> f;
    f.schema = r.schema;
    for (const Tuple& t : r.tuples) {
        f.keys.insert(f.keys.end(), t.begin(), t.end());
        f.values.push_back(sr.one());
    }
    return f;
}

// One at x_{S∩T} iff some extension is nonzero. Schema keeps f's column order.
template <class V, class SR>
Factor<V> indicator_projection(const Factor<V>& f, const std::vector<Var>& T, const SR& sr) {
    std::vector<std::size_t> pos;
    std::vector<Var> schema;
    for (std::size_t i = 0; i < f.schema.size(); ++i)
        if (std::find(T.begin(), T.end(), f.schema[i]) != T.end()) {
            pos.push_back(i);
            schema.push_back(f.schema[i]);
        }
    if (pos.empty()) throw EmptyProjection("factor schema does not meet the target set");
    std::vector<Tuple> rows;
    rows.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        Tuple t;
        for (std::size_t p : pos) t.push_back(f.key(i)[p]);
        rows.push_back(std::move(t));
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    Factor<V> out;
    out.schema = std::move(schema);
    for (const Tuple& t : rows) {
        out.keys.insert(out.keys.end(), t.begin(), t.end());
        out.values.push_back(sr.one());
    }
    return out;
}

}  // namespace negcq
