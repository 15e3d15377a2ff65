#pragma once

#include "negcq/error.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace negcq {

inline std::optional<std::pair<int, int>> prime_power(int q) {
    if (q < 2) return std::nullopt;
    int p = 2;
    while (p * p <= q && q % p) ++p;
    if (q % p) p = q;
    int m = 0, r = q;
    while (r % p == 0) { r /= p; ++m; }
    if (r != 1) return std::nullopt;
    return std::make_pair(p, m);
}

inline int next_prime_power(int q) {
    while (!prime_power(q)) ++q;
    return q;
}

// GF(p^m); elements 0..q-1 are base-p digit vectors of polynomials over F_p.
class GaloisField {
public:
    explicit GaloisField(int q) : q_(q) {
        auto pm = prime_power(q);
        if (!pm) throw ParameterError(std::to_string(q) + " is not a prime power");
        p_ = pm->first;
        m_ = pm->second;
        build_tables();
    }

    int q() const { return q_; }
    int characteristic() const { return p_; }

    int add(int a, int b) const {
        if (p_ == 2) return a ^ b;
        int out = 0, scale = 1;
        for (int i = 0; i < m_; ++i) {
            out += ((a % p_ + b % p_) % p_) * scale;
            a /= p_; b /= p_; scale *= p_;
        }
        return out;
    }
    int mul(int a, int b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[static_cast<std::size_t>((log_[static_cast<std::size_t>(a)] + log_[static_cast<std::size_t>(b)]) % (q_ - 1))];
    }
    int pow(int a, int e) const {
        int out = 1;
        for (int i = 0; i < e; ++i) out = mul(out, a);
        return out;
    }
    // Horner evaluation of Σ coeffs[i] x^i.
    int eval(const std::vector<int>& coeffs, int x) const {
        int acc = 0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = add(mul(acc, x), *it);
        return acc;
    }

private:
    int q_, p_ = 0, m_ = 0;
    std::vector<int> exp_, log_;

    // multiply a polynomial element by x modulo the monic `poly` (digits low to high, length m+1)
    int times_x(int a, const std::vector<int>& poly) const {
        std::vector<int> d(static_cast<std::size_t>(m_ + 1), 0);
        for (int i = 0; i < m_; ++i) { d[static_cast<std::size_t>(i + 1)] = a % p_; a /= p_; }
        const int top = d[static_cast<std::size_t>(m_)];
        for (int i = 0; i < m_; ++i)
            d[static_cast<std::size_t>(i)] = ((d[static_cast<std::size_t>(i)] - top * poly[static_cast<std::size_t>(i)]) % p_ + p_) % p_;
        int out = 0, scale = 1;
        for (int i = 0; i < m_; ++i) { out += d[static_cast<std::size_t>(i)] * scale; scale *= p_; }
        return out;
    }

    void build_tables() {
        exp_.assign(static_cast<std::size_t>(q_ - 1), 0);
        log_.assign(static_cast<std::size_t>(q_), 0);
        if (m_ == 1) {
            for (int g = 1; g < q_; ++g)
                if (fill_from([&](int a) { return static_cast<int>((static_cast<long long>(a) * g) % q_); })) return;
            throw ConstructionBug("no primitive root mod " + std::to_string(q_));
        }
        // search monic degree-m polynomials for one where x is primitive
        int total = 1;
        for (int i = 0; i < m_; ++i) total *= p_;
        for (int low = 0; low < total; ++low) {
            std::vector<int> poly(static_cast<std::size_t>(m_ + 1), 0);
            int r = low;
            for (int i = 0; i < m_; ++i) { poly[static_cast<std::size_t>(i)] = r % p_; r /= p_; }
            poly[static_cast<std::size_t>(m_)] = 1;
            if (poly[0] == 0) continue;
            if (fill_from([&](int a) { return times_x(a, poly); })) return;
        }
        throw ConstructionBug("no primitive polynomial for GF(" + std::to_string(q_) + ")");
    }

    template <class Step>
    bool fill_from(Step step) {
        std::vector<int> seen(static_cast<std::size_t>(q_), 0);
        int a = 1;
        for (int i = 0; i < q_ - 1; ++i) {
            if (seen[static_cast<std::size_t>(a)] || a == 0) return false;
            seen[static_cast<std::size_t>(a)] = 1;
            exp_[static_cast<std::size_t>(i)] = a;
            log_[static_cast<std::size_t>(a)] = i;
            a = step(a);
        }
        return a == 1;
    }
};

// Reed–Solomon [n, d] over F_q: message m ↦ (Σ m_i x^i evaluated at points 0..n-1).
struct RSCode {
    GaloisField field;
    int d, n;

    RSCode(int q, int dim, int len) : field(q), d(dim), n(len) {
        if (dim < 1 || dim > len || len > q)
            throw ParameterError("Reed-Solomon needs 1 <= d <= n <= q (d=" + std::to_string(dim) + ", n=" +
                                 std::to_string(len) + ", q=" + std::to_string(q) + ")");
    }

    int q() const { return field.q(); }
    int distance() const { return n - d + 1; }

    std::vector<std::vector<int>> generator() const {
        std::vector<std::vector<int>> G(static_cast<std::size_t>(d), std::vector<int>(static_cast<std::size_t>(n)));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < n; ++j) G[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = field.pow(j, i);
        return G;
    }

    // Message j as base-q digits, low first.
    std::vector<int> message(std::uint64_t j) const {
        std::vector<int> m(static_cast<std::size_t>(d), 0);
        for (int i = 0; i < d; ++i) { m[static_cast<std::size_t>(i)] = static_cast<int>(j % static_cast<std::uint64_t>(q())); j /= static_cast<std::uint64_t>(q()); }
        return m;
    }
    int symbol(std::uint64_t j, int position) const { return field.eval(message(j), position); }
    std::vector<int> codeword(std::uint64_t j) const {
        const auto m = message(j);
        std::vector<int> w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = field.eval(m, i);
        return w;
    }
    std::uint64_t num_codewords() const {
        std::uint64_t out = 1;
        for (int i = 0; i < d; ++i) out *= static_cast<std::uint64_t>(q());
        return out;
    }
};

}  // namespace negcq
