// SPDX-License-Identifier: Apache-2.0
//
// Radio-network model: hexagonal three-sector layout, COST-231 Hata path
// loss, a 3GPP-style horizontal+vertical antenna pattern, full-buffer SINR
// with strongest-server association, and per-cell KPI extraction.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gaq/rng.hpp"
#include "gaq/tensor.hpp"

namespace gaq {

struct SimConfig {
    int n_rings = 2;                 // hex rings around the centre site
    int users = 1000;                // U
    int neighbors_k = 5;             // |N(i)|
    double intersite_min = 300.0;    // d range, metres
    double intersite_max = 1500.0;
    double antenna_height = 32.0;    // h, metres
    double ue_height = 1.5;          // metres
    double frequency = 2100.0;       // f, MHz
    double traffic_volume = 1.0;     // tau, Mbps; stored, unused by the full-buffer model
    double noise_power = -104.0;     // dBm
    double tx_power = 46.0;          // dBm
    int episode_len = 20;            // steps between resets
    std::uint64_t seed = 0;

    /// Throws ContractError describing the first violated constraint.
    void validate() const;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;
};

double distance(Vec2 a, Vec2 b);

inline constexpr int kSectorsPerSite = 3;
inline constexpr int kTiltActions = 16;  // integer degrees 0..15
inline constexpr double kMaxTiltDeg = 15.0;

struct Cell {
    int id = 0;
    int site_id = 0;
    Vec2 position;
    double azimuth_deg = 0.0;  // counter-clockwise from +x
    double tilt_deg = 0.0;     // downtilt, [0, 15]

    Vec2 direction() const;
};

/// Number of sites in a layout with `n_rings` rings: 1 + 3 n (n + 1).
std::size_t site_count(int n_rings);

/// Site centres, centre first, then ring by ring.
std::vector<Vec2> hex_layout(int n_rings, double intersite);

/// Three cells per site at azimuths 0°, 120°, 240°; cell id = 3·site + sector.
std::vector<Cell> make_cells(std::span<const Vec2> sites, double tilt_deg = 0.0);

/// Radius of the disc users are dropped in: the outermost ring plus one
/// intersite distance of margin. Also the position normalisation scale.
double layout_radius(int n_rings, double intersite);

/// `config.users` positions uniform over the layout disc.
std::vector<Vec2> place_users(const SimConfig& config, double intersite, Rng& rng);

inline constexpr double kMinLinkDistance = 10.0;  // metres
inline constexpr double kMetropolitanCorrection = 3.0;

/// COST-231 Hata urban path loss in dB. Distances below 10 m are clamped;
/// non-positive or non-finite distances throw DomainError.
double path_loss_db(double distance_m, double frequency_mhz, double h_bs, double h_ue,
                    double c_m = kMetropolitanCorrection);

struct AntennaPattern {
    double phi_3db = 65.0;
    double theta_3db = 10.0;
    double a_max = 30.0;
    double sla_v = 30.0;
    double max_gain = 15.0;  // dBi at boresight
};

/// Gain in dBi given the horizontal offset from azimuth (`phi`, degrees,
/// wrapped to [-180, 180]) and the depression angle below horizon (`theta`).
double antenna_gain_db(double phi_deg, double theta_deg, double tilt_deg,
                       const AntennaPattern& pattern = {});

double antenna_gain_db(const Cell& cell, Vec2 user, double h_bs, double h_ue,
                       const AntennaPattern& pattern = {});

struct NetworkSnapshot {
    std::vector<double> sinr_db;               // per user
    std::vector<int> serving;                  // per user
    std::vector<std::vector<int>> cell_users;  // per cell, ascending user id
    std::vector<double> cell_mean_sinr_db;     // per cell
};

inline constexpr double kEmptyCellSinrDb = -20.0;

/// users × cells table of received power in dBm.
Tensor2 received_power_dbm(std::span<const Cell> cells, std::span<const Vec2> users,
                           const SimConfig& config);

/// Strongest-server association (ties to lowest cell id) and full-buffer
/// SINR from a received-power table.
NetworkSnapshot associate(const Tensor2& rx_dbm, double noise_dbm);

NetworkSnapshot compute_snapshot(std::span<const Cell> cells, std::span<const Vec2> users,
                                 const SimConfig& config);

/// Linear-interpolation percentile (rank q·(n−1)), q in [0,1]. Empty input
/// throws DomainError.
double percentile(std::vector<double> values, double q);

inline constexpr std::size_t kStateDim = 8;

struct CellState {
    Vec2 position;
    Vec2 direction;
    double p10 = kEmptyCellSinrDb;
    double p50 = kEmptyCellSinrDb;
    double p90 = kEmptyCellSinrDb;
    double tilt_deg = 0.0;

    /// Learning features: position / radius, unit direction, SINR
    /// percentiles mapped from [-20, 40] dB onto [0, 1], tilt / 15.
    std::array<double, kStateDim> features(double radius) const;
};

CellState cell_state(const Cell& cell, const NetworkSnapshot& snapshot);

/// CSV: user_id,x,y,serving_cell,sinr_db
void write_snapshot_csv(std::ostream& out, std::span<const Vec2> users,
                        const NetworkSnapshot& snapshot);

}  // namespace gaq
