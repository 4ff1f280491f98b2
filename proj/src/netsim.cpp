// SPDX-License-Identifier: Apache-2.0

#include "gaq/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace gaq {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double wrap_degrees(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return w - 180.0;
}

}  // namespace

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ContractError(msg); };
    if (n_rings < 0) fail(fmt::format("n_rings must be >= 0, got {}", n_rings));
    if (users < 1) fail(fmt::format("users must be >= 1, got {}", users));
    if (neighbors_k < 0) fail(fmt::format("neighbors_k must be >= 0, got {}", neighbors_k));
    if (!(intersite_min > 0.0) || !(intersite_max >= intersite_min)) {
        fail(fmt::format("intersite range [{}, {}] is not a positive interval", intersite_min,
                         intersite_max));
    }
    if (!(antenna_height > ue_height) || !(ue_height > 0.0)) {
        fail(fmt::format("antenna_height {} must exceed ue_height {} > 0", antenna_height,
                         ue_height));
    }
    if (!(frequency > 0.0)) fail(fmt::format("frequency must be positive, got {}", frequency));
    if (!(traffic_volume >= 0.0)) fail("traffic_volume must be >= 0");
    if (!std::isfinite(noise_power) || !std::isfinite(tx_power)) {
        fail("noise_power and tx_power must be finite");
    }
    if (episode_len < 1) fail(fmt::format("episode_len must be >= 1, got {}", episode_len));
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Vec2 Cell::direction() const {
    const double rad = azimuth_deg / kDegPerRad;
    return {std::cos(rad), std::sin(rad)};
}

std::size_t site_count(int n_rings) {
    const auto n = static_cast<std::size_t>(n_rings);
    return 1 + 3 * n * (n + 1);
}

std::vector<Vec2> hex_layout(int n_rings, double intersite) {
    // Axial coordinates; neighbouring hexes sit exactly `intersite` apart.
    static constexpr std::array<std::array<int, 2>, 6> kDirections{
        {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}}};
    const double half_sqrt3 = std::sqrt(3.0) / 2.0;
    auto to_xy = [&](int q, int r) {
        return Vec2{intersite * (q + 0.5 * r), intersite * half_sqrt3 * r};
    };

    std::vector<Vec2> sites{{0.0, 0.0}};
    sites.reserve(site_count(n_rings));
    for (int ring = 1; ring <= n_rings; ++ring) {
        int q = kDirections[4][0] * ring;
        int r = kDirections[4][1] * ring;
        for (const auto& dir : kDirections) {
            for (int step = 0; step < ring; ++step) {
                sites.push_back(to_xy(q, r));
                q += dir[0];
                r += dir[1];
            }
        }
    }
    return sites;
}

std::vector<Cell> make_cells(std::span<const Vec2> sites, double tilt_deg) {
    std::vector<Cell> cells;
    cells.reserve(sites.size() * kSectorsPerSite);
    for (std::size_t s = 0; s < sites.size(); ++s) {
        for (int sector = 0; sector < kSectorsPerSite; ++sector) {
            cells.push_back(Cell{.id = static_cast<int>(cells.size()),
                                 .site_id = static_cast<int>(s),
                                 .position = sites[s],
                                 .azimuth_deg = 120.0 * sector,
                                 .tilt_deg = tilt_deg});
        }
    }
    return cells;
}

double layout_radius(int n_rings, double intersite) { return (n_rings + 1) * intersite; }

std::vector<Vec2> place_users(const SimConfig& config, double intersite, Rng& rng) {
    const double radius = layout_radius(config.n_rings, intersite);
    std::vector<Vec2> users(static_cast<std::size_t>(config.users));
    for (auto& u : users) {
        const double r = radius * std::sqrt(rng.uniform());
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        u = {r * std::cos(angle), r * std::sin(angle)};
    }
    return users;
}

double path_loss_db(double distance_m, double frequency_mhz, double h_bs, double h_ue,
                    double c_m) {
    if (!std::isfinite(distance_m) || distance_m <= 0.0) {
        throw DomainError(fmt::format("path_loss_db: distance {} m is not positive", distance_m));
    }
    const double d_km = std::max(distance_m, kMinLinkDistance) / 1000.0;
    const double log_f = std::log10(frequency_mhz);
    const double log_hb = std::log10(h_bs);
    const double a_hm = (1.1 * log_f - 0.7) * h_ue - (1.56 * log_f - 0.8);
    return 46.3 + 33.9 * log_f - 13.82 * log_hb - a_hm + (44.9 - 6.55 * log_hb) * std::log10(d_km) +
           c_m;
}

double antenna_gain_db(double phi_deg, double theta_deg, double tilt_deg,
                       const AntennaPattern& p) {
    const double phi = wrap_degrees(phi_deg);
    const double horizontal = -std::min(12.0 * std::pow(phi / p.phi_3db, 2.0), p.a_max);
    const double vertical =
        -std::min(12.0 * std::pow((theta_deg - tilt_deg) / p.theta_3db, 2.0), p.sla_v);
    return p.max_gain - std::min(-(horizontal + vertical), p.a_max);
}

double antenna_gain_db(const Cell& cell, Vec2 user, double h_bs, double h_ue,
                       const AntennaPattern& pattern) {
    const double dx = user.x - cell.position.x;
    const double dy = user.y - cell.position.y;
    const double bearing = std::atan2(dy, dx) * kDegPerRad;
    const double depression = std::atan2(h_bs - h_ue, std::hypot(dx, dy)) * kDegPerRad;
    return antenna_gain_db(bearing - cell.azimuth_deg, depression, cell.tilt_deg, pattern);
}

Tensor2 received_power_dbm(std::span<const Cell> cells, std::span<const Vec2> users,
                           const SimConfig& config) {
    Tensor2 rx(users.size(), cells.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double d = std::max(distance(users[u], cells[c].position), kMinLinkDistance);
            rx(u, c) = config.tx_power -
                       path_loss_db(d, config.frequency, config.antenna_height, config.ue_height) +
                       antenna_gain_db(cells[c], users[u], config.antenna_height, config.ue_height);
        }
    }
    return rx;
}

NetworkSnapshot associate(const Tensor2& rx_dbm, double noise_dbm) {
    const std::size_t n_users = rx_dbm.rows();
    const std::size_t n_cells = rx_dbm.cols();
    if (n_cells == 0) {
        throw ContractError("associate: no cells");
    }
    NetworkSnapshot snap;
    snap.sinr_db.resize(n_users);
    snap.serving.resize(n_users);
    snap.cell_users.assign(n_cells, {});
    snap.cell_mean_sinr_db.assign(n_cells, kEmptyCellSinrDb);

    const double noise = db_to_linear(noise_dbm);
    for (std::size_t u = 0; u < n_users; ++u) {
        auto row = rx_dbm.row(u);
        // max_element returns the first maximum: lowest cell id wins ties.
        const auto best = static_cast<std::size_t>(
            std::distance(row.begin(), std::max_element(row.begin(), row.end())));
        double interference = 0.0;
        for (std::size_t c = 0; c < n_cells; ++c) {
            if (c != best) {
                interference += db_to_linear(row[c]);
            }
        }
        const double signal = db_to_linear(row[best]);
        snap.sinr_db[u] = 10.0 * std::log10(signal / (interference + noise));
        snap.serving[u] = static_cast<int>(best);
        snap.cell_users[best].push_back(static_cast<int>(u));
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        const auto& members = snap.cell_users[c];
        if (members.empty()) {
            continue;
        }
        double total = 0.0;
        for (int u : members) {
            total += snap.sinr_db[static_cast<std::size_t>(u)];
        }
        snap.cell_mean_sinr_db[c] = total / static_cast<double>(members.size());
    }
    return snap;
}

NetworkSnapshot compute_snapshot(std::span<const Cell> cells, std::span<const Vec2> users,
                                 const SimConfig& config) {
    return associate(received_power_dbm(cells, users, config), config.noise_power);
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw DomainError("percentile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::array<double, kStateDim> CellState::features(double radius) const {
    auto sinr = [](double db) { return std::clamp((db + 20.0) / 60.0, 0.0, 1.0); };
    return {position.x / radius, position.y / radius, direction.x, direction.y,
            sinr(p10),           sinr(p50),           sinr(p90),   tilt_deg / kMaxTiltDeg};
}

CellState cell_state(const Cell& cell, const NetworkSnapshot& snapshot) {
    CellState s{.position = cell.position, .direction = cell.direction(), .tilt_deg = cell.tilt_deg};
    const auto& members = snapshot.cell_users.at(static_cast<std::size_t>(cell.id));
    if (members.empty()) {
        return s;
    }
    std::vector<double> sinr;
    sinr.reserve(members.size());
    for (int u : members) {
        sinr.push_back(snapshot.sinr_db[static_cast<std::size_t>(u)]);
    }
    s.p10 = percentile(sinr, 0.10);
    s.p50 = percentile(sinr, 0.50);
    s.p90 = percentile(sinr, 0.90);
    return s;
}

void write_snapshot_csv(std::ostream& out, std::span<const Vec2> users,
                        const NetworkSnapshot& snapshot) {
    out << "user_id,x,y,serving_cell,sinr_db\n";
    for (std::size_t u = 0; u < users.size(); ++u) {
        fmt::print(out, "{},{},{},{},{}\n", u, users[u].x, users[u].y, snapshot.serving[u],
                   snapshot.sinr_db[u]);
    }
}

}  // namespace gaq
