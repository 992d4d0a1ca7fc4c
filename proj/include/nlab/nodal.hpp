#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlab/ensemble.hpp"

namespace nlab::nodal {

/// Zero of a 1-D wave with its derivative; the nodal set on the circle.
struct Zero1D {
    double x = 0.0;
    double derivative = 0.0;
};

struct ZeroSet1D {
    std::vector<Zero1D> zeros;
    bool degenerate = false;  // some zero has |f'| below the gradient floor
    double eps_grad = 0.0;
};

/// Segment soup from marching squares; midpoints/lengths/tangents feed the
/// weighted-volume and pairing estimators.
struct Segment2D {
    std::array<double, 2> a{}, b{};
    std::array<double, 2> midpoint{};
    std::array<double, 2> tangent{};
    double length = 0.0;
};

struct SegmentMesh2D {
    std::vector<Segment2D> segments;
};

/// Welded triangle mesh on the 3-torus; vertices are keyed by the grid edge
/// they interpolate, so V, E, F are exact integers.
struct TriMesh3D {
    std::vector<std::array<double, 3>> vertices;   // coordinates wrapped into [0,2pi)
    std::vector<std::array<int, 3>> triangles;
    double area = 0.0;  // accumulated from cell-local coordinates
};

/// One zero per sign change on the sampled circle, refined by bisection to
/// |interval| <= tol.  Grid values exactly at zero are nudged by
/// 1e-12 * range before sign classification.
ZeroSet1D find_zeros_circle(const ensemble::WaveSample& f, int grid, double tol,
                            double eps_grad = 0.0);

/// Marching squares on the periodic grid; saddle-ambiguous cells are resolved
/// by sampling f at the cell center.
SegmentMesh2D marching_squares(const ensemble::WaveSample& f, int grid);

/// sum weight(midpoint) * length.
double nodal_volume(const SegmentMesh2D& mesh,
                    const std::function<double(std::span<const double>)>& weight);

/// Isosurface of {f=0} on the periodic grid via the Kuhn six-tetrahedra
/// decomposition of each cell: every shared face is cut identically, so the
/// welded complex is crack-free and V-E+F is the Euler characteristic.
TriMesh3D extract_isosurface(const ensemble::WaveSample& f, int grid,
                             std::span<const double> origin = {});

/// V - E + F computed from the triangle list (distinct vertex ids, distinct
/// undirected edges).
long euler_characteristic(const TriMesh3D& mesh);

/// Euler characteristic of a finite zero set: its cardinality.
long euler_points(const ZeroSet1D& zeros);

/// Compactly supported n-form on the punctured cotangent chart, decomposed
/// into components omega_{alpha,beta} dy^alpha ^ deta_beta with
/// |alpha|+|beta| = n.  Components must vanish outside r0 <= |eta| <= r1.
struct TestForm {
    struct Component {
        std::uint32_t y_mask = 0;    // ascending dy factors
        std::uint32_t eta_mask = 0;  // ascending deta factors
        std::function<double(std::span<const double>, std::span<const double>)> value;
    };
    int n = 1;
    double r0 = 0.5;
    double r1 = 2.0;
    std::vector<Component> components;

    void validate() const;
};

struct PairingConfig {
    int quad_nodes = 16;           // per sign branch (>= 16); doubled for the convergence check
    double eps_grad_scale = 1e-8;  // gradient floor = scale * lambda * rms(f)
    int grid = 0;                  // 0: auto, at least 8 points per wavelength
    double convergence_tol = 1e-3;
    double zero_tol = 1e-10;
};

struct PairingOutcome {
    double value = 0.0;
    bool degenerate = false;
    long mesh_elements = 0;
};

/// Conormal-cycle pairing estimator
///   P(f) = int_S int_t (1/|grad f|) W(x,t) dsigma dt,
/// where W(x,t) is the dy^1..dy^n ^ deta_1..deta_n ^ dt coefficient of
/// df ^ prod_j d(t d_j f - eta_j) ^ omega at eta = t grad f(x), and the
/// ordinary t-integral runs over both sign branches truncated by the support
/// of omega.  Implemented for n = 1 and n = 2.
PairingOutcome conormal_pairing(const ensemble::WaveSample& f, const TestForm& form,
                                const PairingConfig& cfg);

/// n=1 closed form P(f) = -sum_zeros int omega_{(0),(1)}(x, eta) deta.
double pairing_closed_form_1d(const ensemble::WaveSample& f, const TestForm& form,
                              const PairingConfig& cfg);

/// Default grid, rounded to a power of two.  At least 8 points per
/// wavelength 2pi/lambda; 24 in one dimension, where grids are cheap and
/// close zero pairs would otherwise slip through a cell.
int auto_grid(double lambda, int dim = 2);

std::string mesh_obj(const TriMesh3D& mesh);
std::string polylines_csv(const SegmentMesh2D& mesh);

}  // namespace nlab::nodal
