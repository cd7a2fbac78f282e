#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "coclab/cocycle.hpp"
#include "coclab/conformal.hpp"

namespace coclab {

// ---------------------------------------------------------------------------
// Pairs of lines

/// Unordered pair of lines through the origin, as angles in [0, π) with
/// first ≤ second.
struct LinePair {
  double first = 0;
  double second = 0;
};

LinePair make_pair_of_lines(double a, double b);

/// max over the better matching of the two lines.
double pair_distance(const LinePair& p, const LinePair& q);

/// Image of a pair under a 2×2 matrix.
LinePair push_pair(const Mat& m, const LinePair& p);

struct PairOptions {
  long max_steps = 200000;     // per orbit direction
  double min_gap = 1.0;        // log σ₁/σ₂ above which any candidate counts
  double found_gap = 4.0;      // unsettled candidates open a new line only above this
  double settled_gap = 0.01;   // lower floor for candidates whose line has stopped moving
  double settled_drift = 1e-12;
  double target_error = 1e-10; // stop once both lines are estimated this accurately
  double cluster_radius = 0.05;
};

/// Candidate lines at one point: image-dominant lines of products
/// arriving from the past and contracted lines of products leaving into
/// the future, clustered mod π. Each candidate carries an error estimate:
/// the step-to-step drift of its line plus rounding amplified by the
/// largest gap its product showed toward any other line. A product that
/// first favoured line A by e^G can only resolve line B to about eps·e^G.
/// `ok` when exactly two clusters form, each with a finite estimate.
struct PairDetection {
  bool ok = false;
  LinePair pair;
  double gap_first = 0;
  double gap_second = 0;
  double error_first = 0;
  double error_second = 0;
  int clusters = 0;
  long steps = 0;
};

PairDetection detect_line_pair(const CocycleSpec& c, const TorusPoint& x, const PairOptions& opt = {});

struct LinePairField {
  std::vector<TorusPoint> grid;
  std::vector<LinePair> pairs;
  std::vector<double> defects;  // invariance defect per grid point
  double residual = 0;          // max defect
  long failures = 0;            // points without a pair
  bool ok = false;
};

/// Detects the pair at every grid point and at its image; the defect at x
/// is the distance between F(x)·pair(x) and the pair detected at f(x).
LinePairField line_pair_scan(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double tol,
                             const PairOptions& opt = {});

/// As line_pair_scan, throwing NoInvariantPair unless every point has a
/// pair and the residual is below tol.
LinePairField invariant_line_pair_field(const CocycleSpec& c, const std::vector<TorusPoint>& grid, double tol,
                                        const PairOptions& opt = {});

struct Monodromy {
  bool swapped = false;   // the tracked line returned as the other line
  double max_jump = 0;    // largest angle change between consecutive steps
  double min_separation = 0;
};

/// Follows one line of the pair continuously around the closed loop
/// t ↦ x + t·period·e_axis, t ∈ [0, 1].
Monodromy pair_monodromy(const CocycleSpec& c, const TorusPoint& x, int axis, int steps = 64,
                         const PairOptions& opt = {});

void write_pair_csv(std::ostream& out, const LinePairField& field);

// ---------------------------------------------------------------------------
// Invariant conformal structures

enum class Barycenter { EnclosingBall, KarcherMean };

struct StructureOptions {
  int window = 64;           // pullbacks by Fᵏ_x for k = 0..window
  double distortion_cap = 100;
  double tol = 1e-8;
  Barycenter barycenter = Barycenter::EnclosingBall;
};

struct StructureField {
  std::vector<TorusPoint> grid;
  std::vector<ConformalStructure> structures;
  std::vector<double> defects;  // distance(act(F(x), τ(x)), τ(fx))
  double max_defect = 0;
  double max_distortion = 0;
};

/// τ(x) = barycenter of {act((Fᵏ_x)⁻¹, τ₀)}. Throws NotQuasiconformalOnWindow
/// when K(x, k) exceeds the cap, NoConvergence when the defect exceeds tol.
StructureField invariant_conformal_structure(const CocycleSpec& c, const ConformalStructure& tau0,
                                             const std::vector<TorusPoint>& grid, const StructureOptions& opt = {});

/// The barycenter at a single point.
ConformalStructure structure_at(const CocycleSpec& c, const ConformalStructure& tau0, const TorusPoint& x,
                                const StructureOptions& opt = {});

// ---------------------------------------------------------------------------
// Coboundaries

struct CoboundaryOptions {
  long orbit_length = 100000;
  double anchor = 1.0;          // ψ at the orbit seed
  int max_period = 4;           // periodic points scanned for the obstruction
  std::int64_t periodic_cap = 20000;
  double tol = 1e-8;            // accepted spread of periodic averages
  double holder_radius = 0.02;  // pair distance for the Hölder diagnostic
  double beta = 1.0;
  long holder_samples = 20000;  // orbit prefix used for the diagnostic
};

struct CoboundaryResult {
  double c = 0;               // log of the constant, from periodic averages
  double birkhoff_mean = 0;   // (1/n) Σ log a along the orbit
  double periodic_gap = 0;    // max over periodic p of |orbit mean of log a − c|
  RationalPoint worst;        // periodic point attaining the gap
  int worst_period = 0;
  long periodic_points = 0;
  bool obstructed = false;
  std::vector<TorusPoint> orbit;
  std::vector<double> log_psi;  // along the orbit
  double holder_constant = 0;   // 95th percentile of |Δ log ψ| / dist^β
  long holder_pairs = 0;
};

/// Never throws on an obstruction; see coboundary_solve.
CoboundaryResult coboundary_analysis(const std::function<double(const BaseVec&)>& a, const ToralAutomorphism& f,
                                     const TorusPoint& seed, const CoboundaryOptions& opt = {});

/// log ψ(fx) = log ψ(x) + log a(x) − c along the orbit of `seed`. Throws
/// ObstructionNonzero when periodic averages of log a disagree.
CoboundaryResult coboundary_solve(const std::function<double(const BaseVec&)>& a, const ToralAutomorphism& f,
                                  const TorusPoint& seed, const CoboundaryOptions& opt = {});

/// max along the orbit of |e^c ψ(fx)/ψ(x) − a(x)| / a(x).
double coboundary_roundtrip_defect(const std::function<double(const BaseVec&)>& a, const CoboundaryResult& r);

// ---------------------------------------------------------------------------
// Flag normalization (fiber dimension 2)

struct FlagStructure {
  std::vector<int> dims{1, 2};
  std::vector<TorusPoint> grid;
  std::vector<Vec2> lines;         // E¹ at grid points
  std::vector<double> a1, a2;      // factor scalings at grid points
  std::vector<double> phi;         // scalar normalizer at grid points
  double line_defect = 0;          // max angle between F(x)E¹(x) and E¹(fx)
  CoboundaryResult ratio;          // coboundary data of a₂/a₁
  bool obstructed = false;
  double log_ratio_constant = 0;   // c of a₂/a₁; nonzero means distinct exponents
  double factor_defect = 0;        // max |scaling of the φF factors − 1| on the orbit
};

/// Never throws on an obstruction; see flag_factor_normalize.
FlagStructure flag_factor_analysis(const CocycleSpec& c, const std::function<Vec2(const BaseVec&)>& line,
                                   const std::vector<TorusPoint>& grid, const CoboundaryOptions& opt = {});

/// Throws ObstructionNonzero when a₂/a₁ is not cohomologous to 1.
FlagStructure flag_factor_normalize(const CocycleSpec& c, const std::function<Vec2(const BaseVec&)>& line,
                                    const std::vector<TorusPoint>& grid, const CoboundaryOptions& opt = {});

// ---------------------------------------------------------------------------
// Polynomial growth and projective Lipschitz bounds

struct GrowthFit {
  double norm_slope = 0;        // m̂: slope of max log ‖Fⁿ‖ against log n
  double distortion_slope = 0;  // slope of max log K against log n
  std::vector<long> n;
  std::vector<double> max_log_norm, max_log_k;
};

GrowthFit polynomial_growth_fit(const CocycleSpec& c, const std::vector<TorusPoint>& grid,
                                const std::vector<long>& n_list);

/// Powers of two 2^lo..2^hi.
std::vector<long> geometric_n_list(int lo, int hi);

struct LipschitzSample {
  double lhs;  // dist(Fⁿξ, Fⁿη)
  double rhs;  // C·K(x, n)·dist(ξ, η)
  double ratio;
};

/// Projective action on lines (angles) with the angle metric; C = 1 is
/// sharp since the derivative of the action is |det A|/|Av|² ≤ σ₁/σ₂.
inline constexpr double kGrassmannConstant = 1.0;

LipschitzSample grassmann_lipschitz_check(const CocycleSpec& c, const TorusPoint& x, long n, double xi,
                                          double eta, double constant = kGrassmannConstant);

double line_image(const Mat& m, double angle);

}  // namespace coclab
