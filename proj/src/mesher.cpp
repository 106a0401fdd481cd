#include "rnoid/mesher.hpp"

#include "rnoid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <unordered_map>

namespace rnoid::mesher {
namespace {

long double orient_ld(const Point& a, const Point& b, const Point& c)
{
    const long double abx = (long double)b.x() - a.x(), aby = (long double)b.y() - a.y();
    const long double acx = (long double)c.x() - a.x(), acy = (long double)c.y() - a.y();
    return abx * acy - aby * acx;
}

// Positive when d lies inside the circumcircle of the counterclockwise triangle abc.
long double incircle_ld(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const long double adx = (long double)a.x() - d.x(), ady = (long double)a.y() - d.y();
    const long double bdx = (long double)b.x() - d.x(), bdy = (long double)b.y() - d.y();
    const long double cdx = (long double)c.x() - d.x(), cdy = (long double)c.y() - d.y();
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return ad * (bdx * cdy - cdx * bdy) + bd * (cdx * ady - adx * cdy) + cd * (adx * bdy - bdx * ady);
}

bool strictly_incircle(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const long double det = incircle_ld(a, b, c, d);
    const long double s = (a - d).squaredNorm() + (b - d).squaredNorm() + (c - d).squaredNorm();
    return det > 1e-13L * s * s;
}

std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};   // nb[k] across the edge opposite v[k]
    bool alive = true;
};

class Cdt {
public:
    Cdt(const Input& in, const Options& opts) : in_(in), opts_(opts)
    {
        partner_.assign(in.segments.size(), -1);
        for (std::size_t i = 0; i < in.segments.size(); ++i) {
            const int j = in.segments[i].partner;
            if (j < 0) continue;
            partner_[i] = j;
            partner_[j] = static_cast<int>(i);
        }
    }

    Output run();

private:
    using SubKey = std::pair<int, double>;

    const Input& in_;
    const Options& opts_;
    std::vector<Point> P_;
    std::vector<int> input_index_;
    std::vector<Segment> segs_;
    std::vector<int> partner_;
    std::vector<Tri> T_;
    std::vector<int> vtri_;
    std::map<SubKey, Subsegment> subs_;
    std::unordered_map<std::uint64_t, SubKey> sub_by_edge_;
    std::deque<int> bad_queue_;
    std::deque<SubKey> enc_queue_;
    bool refining_ = false;
    std::uint32_t rng_ = 12345u;
    std::size_t unfixed_ = 0;
    double min_len_ = 0.0;

    int next_rand()
    {
        rng_ = rng_ * 1664525u + 1013904223u;
        return static_cast<int>((rng_ >> 16) % 3u);
    }

    int edge_index(int t, int a, int b) const
    {
        const auto& v = T_[t].v;
        for (int k = 0; k < 3; ++k)
            if ((v[(k + 1) % 3] == a && v[(k + 2) % 3] == b) || (v[(k + 1) % 3] == b && v[(k + 2) % 3] == a))
                return k;
        return -1;
    }

    bool is_constrained(int a, int b) const { return sub_by_edge_.count(edge_key(a, b)) != 0; }

    void set_nb(int t, int a, int b, int u)
    {
        if (t < 0) return;
        const int k = edge_index(t, a, b);
        T_[t].nb[k] = u;
    }

    int new_tri(int a, int b, int c)
    {
        Tri t;
        t.v = {a, b, c};
        T_.push_back(t);
        return static_cast<int>(T_.size()) - 1;
    }

    void touch(int t)
    {
        for (int k = 0; k < 3; ++k) vtri_[T_[t].v[k]] = t;
        if (refining_) bad_queue_.push_back(t);
    }

    int add_point(const Point& p, int input_idx)
    {
        P_.push_back(p);
        input_index_.push_back(input_idx);
        vtri_.push_back(-1);
        return static_cast<int>(P_.size()) - 1;
    }

    // Walk toward p. Returns triangle index, sets on_edge to the edge index if p is on an edge.
    int locate(const Point& p, int start, int& on_edge)
    {
        int t = start;
        on_edge = -1;
        const std::size_t limit = 4 * T_.size() + 100;
        for (std::size_t step = 0; step < limit; ++step) {
            const auto& v = T_[t].v;
            const int off = next_rand();
            int moved = -1;
            for (int j = 0; j < 3; ++j) {
                const int k = (j + off) % 3;
                const long double o = orient_ld(P_[v[(k + 1) % 3]], P_[v[(k + 2) % 3]], p);
                if (o < 0) {
                    moved = k;
                    break;
                }
            }
            if (moved < 0) {
                on_edge = -1;
                for (int k = 0; k < 3; ++k) {
                    const Point& a = P_[v[(k + 1) % 3]];
                    const Point& b = P_[v[(k + 2) % 3]];
                    const long double o = orient_ld(a, b, p);
                    const long double scale = (b - a).squaredNorm();
                    if (std::abs(o) <= 1e-14L * scale) on_edge = k;
                }
                return t;
            }
            const int u = T_[t].nb[moved];
            if (u < 0) return -1;
            t = u;
        }
        for (std::size_t i = 0; i < T_.size(); ++i) {
            if (!T_[i].alive) continue;
            const auto& v = T_[i].v;
            bool in = true;
            for (int k = 0; k < 3 && in; ++k)
                if (orient_ld(P_[v[(k + 1) % 3]], P_[v[(k + 2) % 3]], p) < 0) in = false;
            if (in) {
                on_edge = -1;
                return static_cast<int>(i);
            }
        }
        return -1;
    }

    void flip(int t, int k)
    {
        // t = (p, a, b) with edge k = (a, b); u = (d, b, a)
        const int u = T_[t].nb[k];
        const int p = T_[t].v[k];
        const int a = T_[t].v[(k + 1) % 3];
        const int b = T_[t].v[(k + 2) % 3];
        const int ku = edge_index(u, a, b);
        const int d = T_[u].v[ku];
        const int t_ab_p_a = T_[t].nb[(k + 2) % 3];   // across (p, a)
        const int t_bp = T_[t].nb[(k + 1) % 3];        // across (b, p)
        const int u_db = T_[u].nb[edge_index(u, d, b)];
        const int n_ad = T_[u].nb[edge_index(u, a, d)];
        T_[t].v = {p, a, d};
        T_[t].nb = {n_ad, u, t_ab_p_a};
        T_[u].v = {p, d, b};
        T_[u].nb = {u_db, t_bp, t};
        set_nb(n_ad, a, d, t);
        set_nb(u_db, d, b, u);
        set_nb(t_bp, b, p, u);
        touch(t);
        touch(u);
    }

    // Restore the Delaunay property around vertex p.
    void legalize(std::vector<std::pair<int, int>> stack)
    {
        while (!stack.empty()) {
            auto [t, p] = stack.back();
            stack.pop_back();
            const int k = [&] {
                for (int j = 0; j < 3; ++j)
                    if (T_[t].v[j] == p) return j;
                return -1;
            }();
            if (k < 0) continue;
            const int u = T_[t].nb[k];
            if (u < 0 || !T_[u].alive) continue;
            const int a = T_[t].v[(k + 1) % 3];
            const int b = T_[t].v[(k + 2) % 3];
            if (is_constrained(a, b)) continue;
            const int ku = edge_index(u, a, b);
            const int d = T_[u].v[ku];
            if (!strictly_incircle(P_[p], P_[a], P_[b], P_[d])) continue;
            // the quadrilateral must be convex for the flip to be valid
            if (orient_ld(P_[p], P_[a], P_[d]) <= 0 || orient_ld(P_[p], P_[d], P_[b]) <= 0) continue;
            flip(t, k);
            stack.push_back({t, p});
            stack.push_back({u, p});
        }
    }

    int insert_in_triangle(int t, const Point& p, int input_idx)
    {
        const int v = add_point(p, input_idx);
        const auto [a, b, c] = T_[t].v;
        const auto nb = T_[t].nb;
        // t -> (v, b, c); t1 -> (v, c, a); t2 -> (v, a, b)
        const int t1 = new_tri(v, c, a);
        const int t2 = new_tri(v, a, b);
        T_[t].v = {v, b, c};
        T_[t].nb = {nb[0], t1, t2};
        T_[t1].nb = {nb[1], t2, t};
        T_[t2].nb = {nb[2], t, t1};
        set_nb(nb[1], c, a, t1);
        set_nb(nb[2], a, b, t2);
        touch(t);
        touch(t1);
        touch(t2);
        legalize({{t, v}, {t1, v}, {t2, v}});
        return v;
    }

    int insert_on_edge(int t, int k, const Point& p, int input_idx)
    {
        const int v = add_point(p, input_idx);
        const int a = T_[t].v[(k + 1) % 3];
        const int b = T_[t].v[(k + 2) % 3];
        const int c = T_[t].v[k];
        const int u = T_[t].nb[k];
        const int n_bc = T_[t].nb[edge_index(t, b, c)];
        const int t_ca = T_[t].nb[edge_index(t, c, a)];
        // t -> (c, a, v), t1 -> (c, v, b)
        const int t1 = new_tri(c, v, b);
        T_[t].v = {c, a, v};
        std::vector<std::pair<int, int>> stack;
        int u1 = -1;
        int d = -1, n_ad = -1, n_db = -1;
        if (u >= 0 && T_[u].alive) {
            const int ku = edge_index(u, a, b);
            d = T_[u].v[ku];
            n_ad = T_[u].nb[edge_index(u, a, d)];
            n_db = T_[u].nb[edge_index(u, d, b)];
            // u -> (d, v, a), u1 -> (d, b, v)
            u1 = new_tri(d, b, v);
            T_[u].v = {d, v, a};
        }
        const int uu = (u >= 0 && T_[u].alive) ? u : -1;
        T_[t].nb = {uu, t1, t_ca};
        T_[t1].nb = {u1, n_bc, t};
        set_nb(n_bc, b, c, t1);
        touch(t);
        touch(t1);
        stack.push_back({t, v});
        stack.push_back({t1, v});
        if (uu >= 0) {
            T_[u].nb = {t, n_ad, u1};
            T_[u1].nb = {t1, u, n_db};
            set_nb(n_db, d, b, u1);
            touch(u);
            touch(u1);
            stack.push_back({u, v});
            stack.push_back({u1, v});
        }
        // constrained bookkeeping
        auto it = sub_by_edge_.find(edge_key(a, b));
        if (it != sub_by_edge_.end()) split_sub_record(it->second, v);
        legalize(stack);
        return v;
    }

    // Replace the subsegment record at key by two halves meeting at vertex v.
    void split_sub_record(SubKey key, int v)
    {
        const Subsegment s = subs_.at(key);
        subs_.erase(key);
        sub_by_edge_.erase(edge_key(s.a, s.b));
        const double tm = 0.5 * (s.t0 + s.t1);
        Subsegment lo = s, hi = s;
        lo.b = v;
        lo.t1 = tm;
        hi.a = v;
        hi.t0 = tm;
        add_sub(lo);
        add_sub(hi);
    }

    void add_sub(const Subsegment& s)
    {
        const SubKey key{s.segment, s.t0};
        subs_[key] = s;
        sub_by_edge_[edge_key(s.a, s.b)] = key;
        if (refining_) enc_queue_.push_back(key);
    }

    int find_edge_triangle(int a, int b, int& k)
    {
        int start = vtri_[a];
        if (start < 0) return -1;
        // rotate around a
        for (int pass = 0; pass < 2; ++pass) {
            int t = start;
            for (int guard = 0; guard < 4096; ++guard) {
                if (t < 0 || !T_[t].alive) break;
                k = edge_index(t, a, b);
                if (k >= 0) return t;
                // move across the edge (a, next) clockwise or counterclockwise
                const auto& v = T_[t].v;
                int ia = 0;
                while (v[ia] != a) ++ia;
                const int across = pass == 0 ? (ia + 1) % 3 : (ia + 2) % 3;
                t = T_[t].nb[across];
                if (t == start) break;
            }
        }
        // fallback scan
        for (std::size_t i = 0; i < T_.size(); ++i) {
            if (!T_[i].alive) continue;
            k = edge_index(static_cast<int>(i), a, b);
            if (k >= 0) return static_cast<int>(i);
        }
        return -1;
    }

    Point sub_point(const Subsegment& s, double t) const
    {
        const Segment& seg = in_.segments[s.segment];
        const Point& A = in_.points[seg.a];
        const Point& B = in_.points[seg.b];
        return A + t * (B - A);
    }

    // Split subsegment at its parameter midpoint, mirroring to the partner segment.
    void split_sub(SubKey key, bool mirror = true)
    {
        auto it = subs_.find(key);
        if (it == subs_.end()) return;
        const Subsegment s = it->second;
        const double tm = 0.5 * (s.t0 + s.t1);
        const Point m = sub_point(s, tm);
        int k = -1;
        const int t = find_edge_triangle(s.a, s.b, k);
        if (t >= 0) {
            insert_on_edge(t, k, m, -1);
        } else {
            int on_edge = -1;
            const int loc = locate(m, vtri_[s.a], on_edge);
            if (loc < 0) throw domain_errors::MeshFailure("segment midpoint outside triangulation");
            const int v = on_edge >= 0 ? insert_on_edge(loc, on_edge, m, -1) : insert_in_triangle(loc, m, -1);
            if (subs_.count(key)) split_sub_record(key, v);
        }
        const int partner = partner_[s.segment];
        if (mirror && partner >= 0) split_sub({partner, s.t0}, false);
    }

    bool encroached(const Subsegment& s)
    {
        int k = -1;
        const int t = find_edge_triangle(s.a, s.b, k);
        if (t < 0) return false;
        const Point& a = P_[s.a];
        const Point& b = P_[s.b];
        auto check = [&](int tri, int kk) {
            const Point& w = P_[T_[tri].v[kk]];
            return (a - w).dot(b - w) < 0.0;
        };
        if (check(t, k)) return true;
        const int u = T_[t].nb[k];
        if (u >= 0 && T_[u].alive) {
            const int ku = edge_index(u, s.a, s.b);
            if (check(u, ku)) return true;
        }
        return false;
    }

    void recover_segments();
    void carve();
    void refine();
    bool is_bad(int t) const;
    void process_encroached();
};

bool Cdt::is_bad(int t) const
{
    const auto& v = T_[t].v;
    const Point& a = P_[v[0]];
    const Point& b = P_[v[1]];
    const Point& c = P_[v[2]];
    const double lmax = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    const Point g = (a + b + c) / 3.0;
    const double target = opts_.size ? opts_.size(g) : std::numeric_limits<double>::infinity();
    if (lmax > target * 1.0 + 1e-15) return true;
    for (int k = 0; k < 3; ++k) {
        const int in = input_index_[v[k]];
        if (in >= 0 && std::find(opts_.apex_points.begin(), opts_.apex_points.end(), in) != opts_.apex_points.end())
            return false;
    }
    return min_angle(a, b, c) < opts_.min_angle_deg * M_PI / 180.0;
}

void Cdt::recover_segments()
{
    std::deque<SubKey> work;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        const auto& seg = segs_[i];
        Subsegment s;
        s.a = seg.a;
        s.b = seg.b;
        s.tag = seg.tag;
        s.segment = static_cast<int>(i);
        s.t0 = 0.0;
        s.t1 = 1.0;
        const SubKey key{s.segment, 0.0};
        subs_[key] = s;
        work.push_back(key);
    }
    std::size_t guard = 0;
    while (!work.empty()) {
        if (++guard > 10 * opts_.max_points) throw domain_errors::MeshFailure("segment recovery did not terminate");
        const SubKey key = work.front();
        work.pop_front();
        auto it = subs_.find(key);
        if (it == subs_.end()) continue;
        const Subsegment s = it->second;
        int k = -1;
        if (find_edge_triangle(s.a, s.b, k) >= 0) {
            sub_by_edge_[edge_key(s.a, s.b)] = key;
            continue;
        }
        const double tm = 0.5 * (s.t0 + s.t1);
        const Point m = sub_point(s, tm);
        int on_edge = -1;
        const int loc = locate(m, vtri_[s.a], on_edge);
        if (loc < 0) throw domain_errors::MeshFailure("segment midpoint outside triangulation");
        const int v = on_edge >= 0 ? insert_on_edge(loc, on_edge, m, -1) : insert_in_triangle(loc, m, -1);
        subs_.erase(key);
        Subsegment lo = s, hi = s;
        lo.b = v;
        lo.t1 = tm;
        hi.a = v;
        hi.t0 = tm;
        subs_[{lo.segment, lo.t0}] = lo;
        subs_[{hi.segment, hi.t0}] = hi;
        work.push_back({lo.segment, lo.t0});
        work.push_back({hi.segment, hi.t0});
        const int partner = partner_[s.segment];
        if (partner >= 0) {
            auto pit = subs_.find({partner, s.t0});
            if (pit != subs_.end() && pit->second.t1 == s.t1) {
                const Subsegment ps = pit->second;
                const Point pm = sub_point(ps, tm);
                int pk = -1;
                int pt = find_edge_triangle(ps.a, ps.b, pk);
                int pv;
                if (pt >= 0) {
                    sub_by_edge_.erase(edge_key(ps.a, ps.b));
                    pv = insert_on_edge(pt, pk, pm, -1);
                } else {
                    int pe = -1;
                    const int ploc = locate(pm, vtri_[ps.a], pe);
                    if (ploc < 0) throw domain_errors::MeshFailure("segment midpoint outside triangulation");
                    pv = pe >= 0 ? insert_on_edge(ploc, pe, pm, -1) : insert_in_triangle(ploc, pm, -1);
                }
                subs_.erase({partner, s.t0});
                Subsegment plo = ps, phi = ps;
                plo.b = pv;
                plo.t1 = tm;
                phi.a = pv;
                phi.t0 = tm;
                subs_[{plo.segment, plo.t0}] = plo;
                subs_[{phi.segment, phi.t0}] = phi;
                work.push_back({plo.segment, plo.t0});
                work.push_back({phi.segment, phi.t0});
            }
        }
    }
    // every recorded subsegment now exists as an edge; rebuild the edge index
    sub_by_edge_.clear();
    for (const auto& [key, s] : subs_) {
        int k = -1;
        if (find_edge_triangle(s.a, s.b, k) < 0) throw domain_errors::MeshFailure("lost a recovered segment");
        sub_by_edge_[edge_key(s.a, s.b)] = key;
    }
}

void Cdt::carve()
{
    std::vector<char> outside(T_.size(), 0);
    std::deque<int> q;
    auto seed = [&](int t) {
        if (t >= 0 && !outside[t]) {
            outside[t] = 1;
            q.push_back(t);
        }
    };
    for (std::size_t i = 0; i < T_.size(); ++i) {
        if (!T_[i].alive) continue;
        for (int k = 0; k < 3; ++k)
            if (T_[i].v[k] < 4) seed(static_cast<int>(i));
    }
    for (const auto& h : in_.holes) {
        int on_edge = -1;
        const int t = locate(h, 0, on_edge);
        seed(t);
    }
    while (!q.empty()) {
        const int t = q.front();
        q.pop_front();
        for (int k = 0; k < 3; ++k) {
            const int u = T_[t].nb[k];
            if (u < 0 || outside[u]) continue;
            const int a = T_[t].v[(k + 1) % 3];
            const int b = T_[t].v[(k + 2) % 3];
            if (is_constrained(a, b)) continue;
            seed(u);
        }
    }
    for (std::size_t i = 0; i < T_.size(); ++i)
        if (outside[i]) T_[i].alive = false;
    for (std::size_t i = 0; i < T_.size(); ++i) {
        if (!T_[i].alive) continue;
        for (int k = 0; k < 3; ++k) {
            const int u = T_[i].nb[k];
            if (u >= 0 && !T_[u].alive) T_[i].nb[k] = -1;
        }
        for (int k = 0; k < 3; ++k) vtri_[T_[i].v[k]] = static_cast<int>(i);
    }
}

void Cdt::process_encroached()
{
    while (!enc_queue_.empty()) {
        if (P_.size() > opts_.max_points) throw domain_errors::MeshFailure("point budget exhausted");
        const SubKey key = enc_queue_.front();
        enc_queue_.pop_front();
        auto it = subs_.find(key);
        if (it == subs_.end()) continue;
        const Subsegment s = it->second;
        if ((P_[s.a] - P_[s.b]).norm() < min_len_) continue;
        if (encroached(s)) split_sub(key);
    }
}

void Cdt::refine()
{
    refining_ = true;
    for (const auto& [key, s] : subs_) enc_queue_.push_back(key);
    process_encroached();
    for (std::size_t i = 0; i < T_.size(); ++i)
        if (T_[i].alive) bad_queue_.push_back(static_cast<int>(i));

    while (!bad_queue_.empty()) {
        if (P_.size() > opts_.max_points) throw domain_errors::MeshFailure("point budget exhausted");
        const int t = bad_queue_.front();
        bad_queue_.pop_front();
        if (!T_[t].alive || !is_bad(t)) continue;
        const auto v = T_[t].v;
        const Point& a = P_[v[0]];
        const Point& b = P_[v[1]];
        const Point& c = P_[v[2]];
        const Point cc = circumcenter(a, b, c);
        const Point o = (a + b + c) / 3.0;

        // straight walk from the centroid toward the circumcenter
        int cur = t;
        int blocked_a = -1, blocked_b = -1;
        int found = -1;
        for (int guard = 0; guard < 100000; ++guard) {
            const auto& w = T_[cur].v;
            bool inside = true;
            int exit_k = -1;
            for (int k = 0; k < 3; ++k) {
                const Point& p = P_[w[(k + 1) % 3]];
                const Point& q = P_[w[(k + 2) % 3]];
                if (orient_ld(p, q, cc) < 0) {
                    inside = false;
                    const long double s1 = orient_ld(o, cc, p);
                    const long double s2 = orient_ld(o, cc, q);
                    if ((s1 <= 0 && s2 >= 0) || (s1 >= 0 && s2 <= 0)) exit_k = k;
                }
            }
            if (inside) {
                found = cur;
                break;
            }
            if (exit_k < 0) {
                for (int k = 0; k < 3; ++k)
                    if (orient_ld(P_[w[(k + 1) % 3]], P_[w[(k + 2) % 3]], cc) < 0) exit_k = k;
            }
            const int pa = w[(exit_k + 1) % 3];
            const int pb = w[(exit_k + 2) % 3];
            const int nxt = T_[cur].nb[exit_k];
            if (is_constrained(pa, pb) || nxt < 0) {
                blocked_a = pa;
                blocked_b = pb;
                break;
            }
            cur = nxt;
        }
        if (found < 0) {
            auto it = sub_by_edge_.find(edge_key(blocked_a, blocked_b));
            if (it != sub_by_edge_.end() && (P_[blocked_a] - P_[blocked_b]).norm() >= min_len_) {
                split_sub(it->second);
                process_encroached();
                bad_queue_.push_back(t);
            } else {
                ++unfixed_;
            }
            continue;
        }
        // cavity of the circumcenter: check constrained edges on its boundary
        std::vector<SubKey> enc;
        {
            std::vector<int> stack{found};
            std::vector<int> seen{found};
            while (!stack.empty()) {
                const int x = stack.back();
                stack.pop_back();
                for (int k = 0; k < 3; ++k) {
                    const int pa = T_[x].v[(k + 1) % 3];
                    const int pb = T_[x].v[(k + 2) % 3];
                    auto it = sub_by_edge_.find(edge_key(pa, pb));
                    if (it != sub_by_edge_.end()) {
                        if ((P_[pa] - cc).dot(P_[pb] - cc) < 0.0) enc.push_back(it->second);
                        continue;
                    }
                    const int y = T_[x].nb[k];
                    if (y < 0 || std::find(seen.begin(), seen.end(), y) != seen.end()) continue;
                    const auto& yv = T_[y].v;
                    if (!strictly_incircle(P_[yv[0]], P_[yv[1]], P_[yv[2]], cc)) continue;
                    seen.push_back(y);
                    stack.push_back(y);
                }
            }
        }
        if (!enc.empty()) {
            std::sort(enc.begin(), enc.end());
            enc.erase(std::unique(enc.begin(), enc.end()), enc.end());
            bool split_any = false;
            for (const auto& key : enc) {
                auto it = subs_.find(key);
                if (it == subs_.end()) continue;
                if ((P_[it->second.a] - P_[it->second.b]).norm() < min_len_) continue;
                split_sub(key);
                split_any = true;
            }
            process_encroached();
            if (split_any)
                bad_queue_.push_back(t);
            else
                ++unfixed_;
            continue;
        }
        // reject circumcenters that nearly coincide with an existing vertex
        bool close = false;
        for (int k = 0; k < 3; ++k)
            if ((P_[T_[found].v[k]] - cc).norm() < 1e-9 * (a - b).norm()) close = true;
        if (close) {
            ++unfixed_;
            continue;
        }
        int on_edge = -1;
        {
            const auto& w = T_[found].v;
            for (int k = 0; k < 3; ++k) {
                const Point& p = P_[w[(k + 1) % 3]];
                const Point& q = P_[w[(k + 2) % 3]];
                if (std::abs(orient_ld(p, q, cc)) <= 1e-14L * (q - p).squaredNorm()) on_edge = k;
            }
        }
        if (on_edge >= 0) {
            const int pa = T_[found].v[(on_edge + 1) % 3];
            const int pb = T_[found].v[(on_edge + 2) % 3];
            if (is_constrained(pa, pb)) {
                ++unfixed_;
                continue;
            }
            insert_on_edge(found, on_edge, cc, -1);
        } else {
            insert_in_triangle(found, cc, -1);
        }
        process_encroached();
    }
    refining_ = false;
}

Output Cdt::run()
{
    if (in_.points.size() < 3) throw domain_errors::MeshFailure("need at least three input points");
    Point lo = in_.points.front(), hi = in_.points.front();
    for (const auto& p : in_.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double span = std::max((hi - lo).maxCoeff(), 1e-300);
    min_len_ = 1e-9 * span;
    const Point pad = Point::Constant(0.25 * span);
    lo -= pad;
    hi += pad;
    add_point(lo, -1);
    add_point(Point(hi.x(), lo.y()), -1);
    add_point(hi, -1);
    add_point(Point(lo.x(), hi.y()), -1);
    const int t0 = new_tri(0, 1, 2);
    const int t1 = new_tri(0, 2, 3);
    T_[t0].nb = {-1, t1, -1};
    T_[t1].nb = {-1, -1, t0};
    touch(t0);
    touch(t1);

    std::vector<int> map(in_.points.size());
    int last = t0;
    for (std::size_t i = 0; i < in_.points.size(); ++i) {
        const Point& p = in_.points[i];
        int on_edge = -1;
        const int t = locate(p, last, on_edge);
        if (t < 0) throw domain_errors::MeshFailure("input point outside bounding box");
        bool dup = false;
        for (int k = 0; k < 3; ++k)
            if ((P_[T_[t].v[k]] - p).norm() <= 1e-13 * span) {
                map[i] = T_[t].v[k];
                dup = true;
            }
        if (dup) continue;
        map[i] = on_edge >= 0 ? insert_on_edge(t, on_edge, p, static_cast<int>(i))
                              : insert_in_triangle(t, p, static_cast<int>(i));
        last = vtri_[map[i]];
    }
    // segments refer to input indices; remap onto triangulation vertices
    segs_ = in_.segments;
    for (auto& s : segs_) {
        s.a = map[s.a];
        s.b = map[s.b];
    }
    recover_segments();
    carve();
    refine();

    Output out;
    std::vector<int> index(P_.size(), -1);
    for (const auto& t : T_) {
        if (!t.alive) continue;
        for (int k = 0; k < 3; ++k) {
            if (index[t.v[k]] < 0) {
                index[t.v[k]] = static_cast<int>(out.points.size());
                out.points.push_back(P_[t.v[k]]);
                out.input_index.push_back(input_index_[t.v[k]]);
            }
        }
        out.triangles.push_back({index[t.v[0]], index[t.v[1]], index[t.v[2]]});
    }
    for (const auto& [key, s] : subs_) {
        Subsegment o = s;
        o.a = index[s.a];
        o.b = index[s.b];
        if (o.a < 0 || o.b < 0) continue;
        out.subsegments.push_back(o);
    }
    out.unfixed = unfixed_;
    return out;
}

} // namespace

Output triangulate(const Input& input, const Options& opts)
{
    Cdt cdt(input, opts);
    return cdt.run();
}

} // namespace rnoid::mesher
