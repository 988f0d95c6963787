#pragma once

#include <numbers>
#include <stdexcept>
#include <string_view>

namespace gfm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Instantaneous per-unit phase quantities.
struct ThreePhase {
    double a{0.0};
    double b{0.0};
    double c{0.0};

    friend bool operator==(const ThreePhase&, const ThreePhase&) = default;
};

struct AlphaBeta {
    double alpha{0.0};
    double beta{0.0};
};

// Two-axis quantity together with the angle of the frame it lives in.
struct DqFrame {
    double d{0.0};
    double q{0.0};
    double theta{0.0};
};

// Positive (p) and negative (n) sequence components, each in its own
// synchronous frame: the positive frame rotates at +theta, the negative at -theta.
struct SequenceFrames {
    double dp{0.0};
    double qp{0.0};
    double dn{0.0};
    double qn{0.0};

    SequenceFrames& operator+=(const SequenceFrames& o) {
        dp += o.dp;
        qp += o.qp;
        dn += o.dn;
        qn += o.qn;
        return *this;
    }
    friend SequenceFrames operator+(SequenceFrames l, const SequenceFrames& r) { return l += r; }
    friend SequenceFrames operator*(double k, SequenceFrames s) {
        return {k * s.dp, k * s.qp, k * s.dn, k * s.qn};
    }

    [[nodiscard]] double positive_magnitude() const;
    [[nodiscard]] double negative_magnitude() const;
    // Sum of products over all four components.
    [[nodiscard]] double dot(const SequenceFrames& o) const {
        return dp * o.dp + qp * o.qp + dn * o.dn + qn * o.qn;
    }
};

// Amplitude-invariant Clarke transform; the zero sequence is dropped.
AlphaBeta abc_to_alpha_beta(const ThreePhase& x);
ThreePhase alpha_beta_to_abc(const AlphaBeta& x);

// Rotation of a planar vector by +angle.
AlphaBeta rotate(const AlphaBeta& x, double angle);

// Amplitude-invariant Park transform. cos(theta), cos(theta - 2pi/3),
// cos(theta + 2pi/3) maps to d = 1, q = 0.
DqFrame abc_to_dq(const ThreePhase& x, double theta);
ThreePhase dq_to_abc(const DqFrame& x);

// Reconstructs the abc signal carried by a pair of sequence frames at angle theta.
ThreePhase sequences_to_abc(const SequenceFrames& s, double theta);

// Couples both sequences into the positive-sequence frame:
// i+ + R(-2 theta) i-. The result oscillates at twice the frame speed when i- != 0.
DqFrame combined_park(const SequenceFrames& i, double theta);

// Decoupled double synchronous reference frame sequence separator.
struct DdsrfState {
    double cutoff{kTwoPi * 50.0 / std::numbers::sqrt2};  // rad/s
    // Filtered estimates, positive frame and negative frame.
    double dp{0.0};
    double qp{0.0};
    double dn{0.0};
    double qn{0.0};
};

// Returns the decoupled positive (+theta frame) and negative (-theta frame)
// components. The low-pass states only carry the cross-decoupling terms.
SequenceFrames ddsrf_step(DdsrfState& state, const ThreePhase& x, double theta, double dt);

// Per-unit system with peak-valued phase bases on both sides of the transformer.
enum class Side { grid, lv };
enum class Quantity { voltage, current, power, impedance };

Side side_from_string(std::string_view name);

struct PerUnitBase {
    double s_base{0.0};
    double v_base_grid{0.0};
    double v_base_lv{0.0};
    double omega_base{0.0};
    double i_base_grid{0.0};
    double i_base_lv{0.0};

    // Builds the bases from rated power and line-to-line rms voltages.
    static PerUnitBase from_ratings(double s_rated, double v_ll_grid, double v_ll_lv, double f_nominal);
    // 2 MVA, 20 kV / 400 V, 50 Hz.
    static PerUnitBase reference();

    [[nodiscard]] double voltage(Side side) const { return side == Side::grid ? v_base_grid : v_base_lv; }
    [[nodiscard]] double current(Side side) const { return side == Side::grid ? i_base_grid : i_base_lv; }
    [[nodiscard]] double impedance(Side side) const { return voltage(side) / current(side); }
    [[nodiscard]] double base_of(Quantity kind, Side side) const;
};

double to_per_unit(double value, const PerUnitBase& base, Side side, Quantity kind);
double from_per_unit(double value, const PerUnitBase& base, Side side, Quantity kind);

}  // namespace gfm
