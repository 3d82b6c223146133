#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace tcsdp {

// Counter-based SplitMix64: draw k is mix64(seed + (k+1) * 0x9E3779B97F4A7C15).
// Uniforms take the top 53 bits; normals use Box-Muller (cosine branch only).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64() {
        ++counter_;
        uint64_t z = seed_ + counter_ * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        const double u1 = 1.0 - uniform();  // (0,1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    Eigen::Vector3d uniform_box(double a, double b) { return {uniform(a, b), uniform(a, b), uniform(a, b)}; }
    Eigen::Vector3d unit_vector() {
        Eigen::Vector3d v;
        do {
            v = {normal(), normal(), normal()};
        } while (v.norm() < 1e-12);
        return v.normalized();
    }
    Eigen::Matrix3d rotation() {
        Eigen::Vector4d q;
        do {
            q = {normal(), normal(), normal(), normal()};
        } while (q.norm() < 1e-12);
        q.normalize();
        return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
    }
    uint64_t draws() const { return counter_; }

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace tcsdp
