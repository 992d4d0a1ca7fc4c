#include "nlab/nodal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "nlab/grassmann.hpp"
#include "nlab/quadrature.hpp"

namespace nlab::nodal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void nudge_exact_zeros(std::vector<double>& values) {
    double range = 0.0;
    for (double v : values) range = std::max(range, std::abs(v));
    if (range == 0.0) range = 1.0;
    const double eps = 1e-12 * range;
    for (double& v : values)
        if (v == 0.0) v = eps;
}

double wrap_2pi(double x) {
    x = std::fmod(x, kTwoPi);
    return x < 0 ? x + kTwoPi : x;
}

}  // namespace

int auto_grid(double lambda, int dim) {
    const double per_wavelength = dim == 1 ? 24.0 : 8.0;
    const int need = std::max(dim == 1 ? 64 : 32,
                              static_cast<int>(std::ceil(per_wavelength * lambda)));
    return (need + 31) / 32 * 32;
}

namespace {
void check_resolution(int grid, double lambda, const char* who) {
    if (grid < 8 || grid < 8.0 * lambda)
        throw std::invalid_argument(std::string(who) + ": need >= 8 grid points per wavelength");
}
}  // namespace

ZeroSet1D find_zeros_circle(const ensemble::WaveSample& f, int grid, double tol, double eps_grad) {
    if (f.dim() != 1) throw std::invalid_argument("find_zeros_circle: needs a 1-D sample");
    check_resolution(grid, f.lambda(), "find_zeros_circle");
    std::vector<double> values = ensemble::evaluate_on_grid(f, grid);
    nudge_exact_zeros(values);

    ZeroSet1D out;
    out.eps_grad = eps_grad;
    const double h = kTwoPi / grid;
    for (int i = 0; i < grid; ++i) {
        const double v0 = values[i];
        const double v1 = values[(i + 1) % grid];
        if ((v0 > 0) == (v1 > 0)) continue;
        double a = i * h, b = (i + 1) * h;
        double fa = v0;
        while (b - a > tol) {
            const double m = 0.5 * (a + b);
            const double x = m;
            const double fm = ensemble::evaluate(f, std::span<const double>(&x, 1));
            if ((fm > 0) == (fa > 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        const double x = 0.5 * (a + b);
        const double d = ensemble::gradient(f, std::span<const double>(&x, 1))[0];
        if (std::abs(d) < eps_grad) out.degenerate = true;
        out.zeros.push_back({x, d});
    }
    return out;
}

SegmentMesh2D marching_squares(const ensemble::WaveSample& f, int grid) {
    if (f.dim() != 2) throw std::invalid_argument("marching_squares: needs a 2-D sample");
    check_resolution(grid, f.lambda(), "marching_squares");
    std::vector<double> values = ensemble::evaluate_on_grid(f, grid);
    nudge_exact_zeros(values);

    const double h = kTwoPi / grid;
    auto value = [&](int i, int j) {
        return values[static_cast<size_t>(((i % grid + grid) % grid)) * grid +
                      static_cast<size_t>((j % grid + grid) % grid)];
    };

    SegmentMesh2D mesh;
    auto add_segment = [&](std::array<double, 2> a, std::array<double, 2> b) {
        Segment2D s;
        s.a = a;
        s.b = b;
        s.midpoint = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const double dx = b[0] - a[0], dy = b[1] - a[1];
        s.length = std::hypot(dx, dy);
        if (s.length > 0) s.tangent = {dx / s.length, dy / s.length};
        mesh.segments.push_back(s);
    };

    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            // corners a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1)
            const double va = value(i, j), vb = value(i + 1, j), vc = value(i + 1, j + 1),
                         vd = value(i, j + 1);
            const double x0 = i * h, y0 = j * h;
            const int code = (va > 0) | ((vb > 0) << 1) | ((vc > 0) << 2) | ((vd > 0) << 3);
            if (code == 0 || code == 15) continue;

            auto cut = [](double t0, double t1) { return t0 / (t0 - t1); };
            // edge crossing points (valid only where signs differ)
            const std::array<double, 2> p_ab = {x0 + h * cut(va, vb), y0};
            const std::array<double, 2> p_bc = {x0 + h, y0 + h * cut(vb, vc)};
            const std::array<double, 2> p_dc = {x0 + h * cut(vd, vc), y0 + h};
            const std::array<double, 2> p_ad = {x0, y0 + h * cut(va, vd)};

            switch (code) {
                case 1: case 14: add_segment(p_ab, p_ad); break;            // a isolated
                case 2: case 13: add_segment(p_ab, p_bc); break;            // b isolated
                case 4: case 11: add_segment(p_bc, p_dc); break;            // c isolated
                case 8: case 7: add_segment(p_dc, p_ad); break;             // d isolated
                case 3: case 12: add_segment(p_ad, p_bc); break;            // ab vs dc
                case 6: case 9: add_segment(p_ab, p_dc); break;             // bc vs ad
                case 5: case 10: {                                          // saddle
                    const std::array<double, 2> center = {x0 + 0.5 * h, y0 + 0.5 * h};
                    double vcen = ensemble::evaluate(f, center);
                    if (vcen == 0.0) vcen = 1e-12;
                    const bool pos_diag_a = code == 5;  // positives at a and c
                    if ((vcen > 0) == pos_diag_a) {
                        // positive corners connected: segments around b and d
                        add_segment(p_ab, p_bc);
                        add_segment(p_dc, p_ad);
                    } else {
                        add_segment(p_ab, p_ad);
                        add_segment(p_bc, p_dc);
                    }
                    break;
                }
                default: break;
            }
        }
    return mesh;
}

double nodal_volume(const SegmentMesh2D& mesh,
                    const std::function<double(std::span<const double>)>& weight) {
    double total = 0.0;
    for (const auto& s : mesh.segments)
        total += weight(std::span<const double>(s.midpoint.data(), 2)) * s.length;
    return total;
}

namespace {

// Kuhn decomposition: six tetrahedra along the main diagonal, one per axis
// permutation.  Offsets are corner indices dx + 2 dy + 4 dz.
constexpr int kTets[6][4] = {
    {0, 1, 3, 7},  // x, y, z
    {0, 1, 5, 7},  // x, z, y
    {0, 2, 3, 7},  // y, x, z
    {0, 2, 6, 7},  // y, z, x
    {0, 4, 5, 7},  // z, x, y
    {0, 4, 6, 7},  // z, y, x
};

struct EdgeKey {
    std::uint64_t packed;
    bool operator==(const EdgeKey& o) const { return packed == o.packed; }
};

struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const {
        std::uint64_t z = k.packed;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};

}  // namespace

TriMesh3D extract_isosurface(const ensemble::WaveSample& f, int grid,
                             std::span<const double> origin) {
    if (f.dim() != 3) throw std::invalid_argument("extract_isosurface: needs a 3-D sample");
    check_resolution(grid, f.lambda(), "extract_isosurface");
    std::vector<double> values = ensemble::evaluate_on_grid(f, grid, origin);
    nudge_exact_zeros(values);

    const double h = kTwoPi / grid;
    std::array<double, 3> orig = {0.0, 0.0, 0.0};
    if (!origin.empty()) std::copy(origin.begin(), origin.end(), orig.begin());
    const auto g = static_cast<std::size_t>(grid);
    auto node_id = [&](int i, int j, int k) -> std::uint64_t {
        const auto wi = static_cast<std::uint64_t>((i % grid + grid) % grid);
        const auto wj = static_cast<std::uint64_t>((j % grid + grid) % grid);
        const auto wk = static_cast<std::uint64_t>((k % grid + grid) % grid);
        return (wi * g + wj) * g + wk;
    };

    TriMesh3D mesh;
    std::unordered_map<EdgeKey, int, EdgeKeyHash> weld;
    weld.reserve(1 << 16);

    // Cell-local corner data for the cell at (i,j,k).
    std::array<std::uint64_t, 8> ids;
    std::array<double, 8> vals;
    std::array<std::array<double, 3>, 8> pos;

    // Local (unwrapped) interpolated positions per cut, used for area; the
    // welded vertex store keeps coordinates wrapped into [0,2pi).
    auto cut_vertex = [&](int ca, int cb, std::array<double, 3>& local) -> int {
        const double va = vals[ca], vb = vals[cb];
        const double t = va / (va - vb);
        for (int a = 0; a < 3; ++a) local[a] = pos[ca][a] + t * (pos[cb][a] - pos[ca][a]);
        std::uint64_t na = ids[ca], nb = ids[cb];
        if (na > nb) std::swap(na, nb);
        const EdgeKey key{(na << 32) | nb};
        auto it = weld.find(key);
        if (it != weld.end()) return it->second;
        const int idx = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back({wrap_2pi(local[0]), wrap_2pi(local[1]), wrap_2pi(local[2])});
        weld.emplace(key, idx);
        return idx;
    };

    auto tri_area = [](const std::array<double, 3>& a, const std::array<double, 3>& b,
                       const std::array<double, 3>& c) {
        const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
        const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
        const double cx = u[1] * v[2] - u[2] * v[1];
        const double cy = u[2] * v[0] - u[0] * v[2];
        const double cz = u[0] * v[1] - u[1] * v[0];
        return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
    };

    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j)
            for (int k = 0; k < grid; ++k) {
                for (int c = 0; c < 8; ++c) {
                    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
                    ids[c] = node_id(i + di, j + dj, k + dk);
                    vals[c] = values[node_id(i + di, j + dj, k + dk)];
                    pos[c] = {orig[0] + (i + di) * h, orig[1] + (j + dj) * h,
                              orig[2] + (k + dk) * h};
                }
                for (const auto& tet : kTets) {
                    int minus[4], plus[4];
                    int nm = 0, np = 0;
                    for (int v = 0; v < 4; ++v) {
                        if (vals[tet[v]] > 0)
                            plus[np++] = tet[v];
                        else
                            minus[nm++] = tet[v];
                    }
                    if (nm == 0 || np == 0) continue;
                    if (nm == 1 || np == 1) {
                        const int lone = (nm == 1) ? minus[0] : plus[0];
                        const int* other = (nm == 1) ? plus : minus;
                        std::array<double, 3> l0, l1, l2;
                        const int v0 = cut_vertex(lone, other[0], l0);
                        const int v1 = cut_vertex(lone, other[1], l1);
                        const int v2 = cut_vertex(lone, other[2], l2);
                        mesh.triangles.push_back({v0, v1, v2});
                        mesh.area += tri_area(l0, l1, l2);
                    } else {
                        // 2 vs 2: quad with cyclic corners
                        std::array<double, 3> l0, l1, l2, l3;
                        const int v0 = cut_vertex(minus[0], plus[0], l0);
                        const int v1 = cut_vertex(minus[0], plus[1], l1);
                        const int v2 = cut_vertex(minus[1], plus[1], l2);
                        const int v3 = cut_vertex(minus[1], plus[0], l3);
                        mesh.triangles.push_back({v0, v1, v2});
                        mesh.triangles.push_back({v0, v2, v3});
                        mesh.area += tri_area(l0, l1, l2) + tri_area(l0, l2, l3);
                    }
                }
            }
    return mesh;
}

long euler_characteristic(const TriMesh3D& mesh) {
    std::unordered_set<int> verts;
    std::unordered_set<std::uint64_t> edges;
    verts.reserve(mesh.vertices.size() * 2);
    edges.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
        for (int v : t) verts.insert(v);
        for (int e = 0; e < 3; ++e) {
            std::uint64_t a = static_cast<std::uint64_t>(t[e]);
            std::uint64_t b = static_cast<std::uint64_t>(t[(e + 1) % 3]);
            if (a > b) std::swap(a, b);
            edges.insert((a << 32) | b);
        }
    }
    return static_cast<long>(verts.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(mesh.triangles.size());
}

long euler_points(const ZeroSet1D& zeros) { return static_cast<long>(zeros.zeros.size()); }

void TestForm::validate() const {
    if (n < 1) throw std::invalid_argument("TestForm: n must be >= 1");
    if (!(r0 > 0.0) || !(r1 > r0)) throw std::invalid_argument("TestForm: need 0 < r0 < r1");
    for (const auto& c : components) {
        if (c.y_mask >= (1u << n) || c.eta_mask >= (1u << n))
            throw std::invalid_argument("TestForm: component mask out of range");
        if (std::popcount(c.y_mask) + std::popcount(c.eta_mask) != n)
            throw std::invalid_argument("TestForm: component degree must equal n");
        if (!c.value) throw std::invalid_argument("TestForm: missing component function");
    }
}

namespace {

struct PairingElement {
    std::vector<double> x;
    double measure = 1.0;  // counting measure (n=1) or segment length (n=2)
    std::vector<double> grad;
    std::vector<double> hess;  // row-major n x n
};

// Coefficient polynomials in t of the wedge
//   df ^ prod_j d(t d_j f - eta_j) ^ (component monomial)
// against the top monomial dy^1..dy^n ^ deta_1..deta_n ^ dt.  The degree is
// at most n-1, so n+1 interpolation nodes recover it exactly.
std::vector<std::vector<double>> wedge_polynomials(int n, const PairingElement& el,
                                                   const TestForm& form) {
    using E = grassmann::Element<double>;
    const int m = 2 * n + 1;
    const std::uint64_t top = (std::uint64_t(1) << m) - 1;

    E df = E::zero(m);
    for (int a = 0; a < n; ++a)
        df = df + E::monomial(m, std::uint64_t(1) << a, el.grad[a]);

    static constexpr double kNodes[4] = {0.0, 1.0, -1.0, 2.0};
    const int nfit = n + 1;
    std::vector<std::vector<double>> samples(form.components.size(), std::vector<double>(nfit));
    for (int q = 0; q < nfit; ++q) {
        const double t = kNodes[q];
        std::vector<E> forms;
        forms.reserve(n + 1);
        forms.push_back(df);
        for (int j = 0; j < n; ++j) {
            E e = E::monomial(m, std::uint64_t(1) << (2 * n), el.grad[j]);  // g_j dt
            e = e + E::monomial(m, std::uint64_t(1) << (n + j), -1.0);      // -deta_j
            for (int l = 0; l < n; ++l)
                e = e + E::monomial(m, std::uint64_t(1) << l,
                                    t * el.hess[static_cast<size_t>(j) * n + l]);
            forms.push_back(e);
        }
        for (size_t c = 0; c < form.components.size(); ++c) {
            const std::uint64_t mask = form.components[c].y_mask |
                                       (static_cast<std::uint64_t>(form.components[c].eta_mask) << n);
            const E omega = E::monomial(m, mask, 1.0);
            samples[c][q] =
                grassmann::wedge_top_coefficient(std::span<const E>(forms.data(), forms.size()),
                                                 omega, top);
        }
    }

    // Solve the tiny Vandermonde system for each component.
    std::vector<std::vector<double>> polys(form.components.size(), std::vector<double>(nfit, 0.0));
    for (size_t c = 0; c < form.components.size(); ++c) {
        std::vector<std::vector<double>> vm(nfit, std::vector<double>(nfit + 1, 0.0));
        for (int r = 0; r < nfit; ++r) {
            double p = 1.0;
            for (int d = 0; d < nfit; ++d) {
                vm[r][d] = p;
                p *= kNodes[r];
            }
            vm[r][nfit] = samples[c][r];
        }
        for (int col = 0; col < nfit; ++col) {
            int piv = col;
            for (int r = col + 1; r < nfit; ++r)
                if (std::abs(vm[r][col]) > std::abs(vm[piv][col])) piv = r;
            std::swap(vm[col], vm[piv]);
            for (int r = 0; r < nfit; ++r) {
                if (r == col || vm[col][col] == 0.0) continue;
                const double factor = vm[r][col] / vm[col][col];
                for (int d = col; d <= nfit; ++d) vm[r][d] -= factor * vm[col][d];
            }
        }
        for (int d = 0; d < nfit; ++d)
            polys[c][d] = vm[d][d] != 0.0 ? vm[d][nfit] / vm[d][d] : 0.0;
    }
    return polys;
}

struct GaussRule {
    std::vector<double> x, w;
    explicit GaussRule(int n) {
        auto [xs, ws] = quadrature::gauss_legendre(n);
        x = std::move(xs);
        w = std::move(ws);
    }
};

double branch_integral(const PairingElement& el, const TestForm& form,
                       const std::vector<std::vector<double>>& polys, double gnorm,
                       const GaussRule& rule, double sign, double* abs_scale) {
    const double lo = form.r0 / gnorm, hi = form.r1 / gnorm;
    const double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
    const int n = static_cast<int>(el.x.size());
    std::vector<double> eta(n);
    double acc = 0.0, acc_abs = 0.0;
    for (size_t q = 0; q < rule.x.size(); ++q) {
        const double t = sign * (mid + rad * rule.x[q]);
        for (int a = 0; a < n; ++a) eta[a] = t * el.grad[a];
        double w = 0.0;
        for (size_t c = 0; c < form.components.size(); ++c) {
            double p = 0.0;
            for (size_t d = polys[c].size(); d-- > 0;) p = p * t + polys[c][d];
            if (p == 0.0) continue;
            w += p * form.components[c].value(el.x, eta);
        }
        acc += rule.w[q] * w;
        acc_abs += rule.w[q] * std::abs(w);
    }
    if (abs_scale) *abs_scale += rad * acc_abs;
    return rad * acc;
}

}  // namespace

PairingOutcome conormal_pairing(const ensemble::WaveSample& f, const TestForm& form,
                                const PairingConfig& cfg) {
    const int n = f.dim();
    if (form.n != n) throw std::invalid_argument("conormal_pairing: form dimension mismatch");
    form.validate();
    if (n > 2) throw std::invalid_argument("conormal_pairing: implemented for n <= 2");
    if (cfg.quad_nodes < 16) throw std::invalid_argument("PairingConfig: need >= 16 nodes per branch");

    const double eps_grad = cfg.eps_grad_scale * f.lambda() * f.rms();
    const int grid = cfg.grid > 0 ? cfg.grid : auto_grid(f.lambda(), n);

    PairingOutcome out;
    std::vector<PairingElement> elements;
    if (n == 1) {
        const ZeroSet1D zeros = find_zeros_circle(f, grid, cfg.zero_tol, eps_grad);
        out.degenerate = zeros.degenerate;
        for (const auto& z : zeros.zeros) {
            PairingElement el;
            el.x = {z.x};
            el.measure = 1.0;
            el.grad = {z.derivative};
            el.hess = ensemble::hessian(f, el.x);
            elements.push_back(std::move(el));
        }
    } else {
        const SegmentMesh2D mesh = marching_squares(f, grid);
        std::vector<double> pts;
        pts.reserve(2 * mesh.segments.size());
        for (const auto& s : mesh.segments) {
            pts.push_back(s.midpoint[0]);
            pts.push_back(s.midpoint[1]);
        }
        const auto jets = ensemble::gradient_hessian_batch(f, pts);
        for (size_t i = 0; i < mesh.segments.size(); ++i) {
            PairingElement el;
            el.x = {mesh.segments[i].midpoint[0], mesh.segments[i].midpoint[1]};
            el.measure = mesh.segments[i].length;
            el.grad = {jets.grad[2 * i], jets.grad[2 * i + 1]};
            el.hess = {jets.hess[4 * i], jets.hess[4 * i + 1], jets.hess[4 * i + 2],
                       jets.hess[4 * i + 3]};
            if (std::hypot(el.grad[0], el.grad[1]) < eps_grad) out.degenerate = true;
            elements.push_back(std::move(el));
        }
    }
    out.mesh_elements = static_cast<long>(elements.size());
    if (out.degenerate) return out;

    const GaussRule coarse(cfg.quad_nodes), fine(2 * cfg.quad_nodes);
    double p_coarse = 0.0, p_fine = 0.0, abs_scale = 0.0;
    for (const auto& el : elements) {
        double gnorm = 0.0;
        for (double ga : el.grad) gnorm += ga * ga;
        gnorm = std::sqrt(gnorm);
        const auto polys = wedge_polynomials(n, el, form);
        const double wgt = el.measure / gnorm;
        for (double sign : {1.0, -1.0}) {
            p_coarse += wgt * branch_integral(el, form, polys, gnorm, coarse, sign, nullptr);
            p_fine += wgt * branch_integral(el, form, polys, gnorm, fine, sign, &abs_scale);
        }
    }
    const double denom = std::max(std::abs(p_fine), 1e-3 * abs_scale);
    if (std::abs(p_fine - p_coarse) > cfg.convergence_tol * std::max(denom, 1e-300))
        throw std::runtime_error("conormal_pairing: t-quadrature did not converge on node doubling");
    out.value = p_fine;
    return out;
}

double pairing_closed_form_1d(const ensemble::WaveSample& f, const TestForm& form,
                              const PairingConfig& cfg) {
    if (f.dim() != 1 || form.n != 1)
        throw std::invalid_argument("pairing_closed_form_1d: needs n = 1");
    form.validate();
    const double eps_grad = cfg.eps_grad_scale * f.lambda() * f.rms();
    const int grid = cfg.grid > 0 ? cfg.grid : auto_grid(f.lambda(), 1);
    const ZeroSet1D zeros = find_zeros_circle(f, grid, cfg.zero_tol, eps_grad);

    const TestForm::Component* comp = nullptr;
    for (const auto& c : form.components)
        if (c.y_mask == 0 && c.eta_mask == 1) comp = &c;
    if (!comp) return 0.0;

    double total = 0.0;
    for (const auto& z : zeros.zeros) {
        const double x = z.x;
        auto integrand = [&](double eta) {
            return comp->value(std::span<const double>(&x, 1), std::span<const double>(&eta, 1));
        };
        double s = quadrature::integrate(integrand, form.r0, form.r1, 2 * cfg.quad_nodes);
        s += quadrature::integrate(integrand, -form.r1, -form.r0, 2 * cfg.quad_nodes);
        total -= s;
    }
    return total;
}

std::string mesh_obj(const TriMesh3D& mesh) {
    std::ostringstream os;
    os.precision(12);
    for (const auto& v : mesh.vertices) os << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return os.str();
}

std::string polylines_csv(const SegmentMesh2D& mesh) {
    std::ostringstream os;
    os << "ax,ay,bx,by,midx,midy,length,tx,ty\n";
    os.precision(12);
    for (const auto& s : mesh.segments)
        os << s.a[0] << ',' << s.a[1] << ',' << s.b[0] << ',' << s.b[1] << ',' << s.midpoint[0]
           << ',' << s.midpoint[1] << ',' << s.length << ',' << s.tangent[0] << ',' << s.tangent[1]
           << '\n';
    return os.str();
}

}  // namespace nlab::nodal
