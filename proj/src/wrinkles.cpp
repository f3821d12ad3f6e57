// Simplified wrinkle segmentation used to feed towel grasping. It is a
// deterministic stand-in, not a reproduction of any published segmenter.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include <Eigen/Dense>

#include "rgrasp/planner.hpp"

namespace rgrasp {

namespace {

struct Plane {
    double a = 0.0;  // z = a x + b y + c
    double b = 0.0;
    double c = 0.0;

    double height_above(const Eigen::Vector3d& p) const { return p.z() - (a * p.x() + b * p.y() + c); }
};

Plane fit_plane(const std::vector<Eigen::Vector3d>& pts, const std::vector<std::size_t>& idx) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto i : idx) {
        mean += pts[i];
    }
    mean /= static_cast<double>(idx.size());

    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d atb = Eigen::Vector2d::Zero();
    for (const auto i : idx) {
        const Eigen::Vector2d d(pts[i].x() - mean.x(), pts[i].y() - mean.y());
        ata.noalias() += d * d.transpose();
        atb += d * (pts[i].z() - mean.z());
    }
    Plane plane;
    const Eigen::LDLT<Eigen::Matrix2d> ldlt(ata);
    if (ldlt.info() == Eigen::Success && ata.determinant() > 1e-18 * std::max(1.0, ata.trace() * ata.trace())) {
        const Eigen::Vector2d ab = ldlt.solve(atb);
        plane.a = ab.x();
        plane.b = ab.y();
    }
    plane.c = mean.z() - plane.a * mean.x() - plane.b * mean.y();
    return plane;
}

struct DisjointSet {
    std::vector<std::size_t> parent;

    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }
};

}  // namespace

std::vector<PointCloud> extract_wrinkles(const PointCloud& cloud, const WrinkleParams& params) {
    const auto& pts = cloud.points;
    if (pts.size() < 3) {
        return {};
    }

    // Lowest fraction of points by height (ties by index) define the base plane.
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    const auto n_low = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::ceil(params.low_fraction * static_cast<double>(pts.size()))));
    const auto by_height = [&](std::size_t a, std::size_t b) {
        return pts[a].z() != pts[b].z() ? pts[a].z() < pts[b].z() : a < b;
    };
    if (n_low < order.size()) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_low), order.end(), by_height);
        order.resize(n_low);
    }
    std::sort(order.begin(), order.end());
    const Plane plane = fit_plane(pts, order);

    // Bucket raised points into grid cells.
    using Cell = std::pair<long long, long long>;
    std::map<Cell, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (plane.height_above(pts[i]) < params.ridge_height) {
            continue;
        }
        const Cell key{static_cast<long long>(std::floor(pts[i].x() / params.grid)),
                       static_cast<long long>(std::floor(pts[i].y() / params.grid))};
        cells[key].push_back(i);
    }
    if (cells.empty()) {
        return {};
    }

    std::map<Cell, std::size_t> cell_id;
    for (const auto& [key, members] : cells) {
        cell_id.emplace(key, cell_id.size());
    }
    DisjointSet sets(cell_id.size());
    for (const auto& [key, id] : cell_id) {
        for (long long dx = -1; dx <= 1; ++dx) {
            for (long long dy = -1; dy <= 1; ++dy) {
                const auto it = cell_id.find({key.first + dx, key.second + dy});
                if (it != cell_id.end()) {
                    sets.unite(id, it->second);
                }
            }
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (const auto& [key, id] : cell_id) {
        auto& g = groups[sets.find(id)];
        const auto& members = cells[key];
        g.insert(g.end(), members.begin(), members.end());
    }

    std::vector<std::vector<std::size_t>> clusters;
    for (auto& [root, members] : groups) {
        if (members.size() >= params.min_points) {
            std::sort(members.begin(), members.end());
            clusters.push_back(std::move(members));
        }
    }
    std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() > b.size() : a.front() < b.front();
    });

    std::vector<PointCloud> out;
    out.reserve(clusters.size());
    const bool org = cloud.organized();
    for (const auto& members : clusters) {
        PointCloud c;
        if (org) {
            c.pixels.emplace();
        }
        c.reserve(members.size());
        for (const auto i : members) {
            c.points.push_back(pts[i]);
            if (org) {
                c.pixels->push_back((*cloud.pixels)[i]);
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace rgrasp
