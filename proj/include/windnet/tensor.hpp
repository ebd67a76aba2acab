#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace windnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operand's shape does not match what an operation expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            out << " x ";
        }
        out << shape[i];
    }
    out << ']';
    return out.str();
}

inline std::size_t shape_volume(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major array of doubles with rank at most 3.
class Tensor {
public:
    static constexpr std::size_t max_rank = 3;

    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape))
    {
        validate_shape(shape_);
        values_.assign(shape_volume(shape_), fill);
    }

    Tensor(Shape shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values))
    {
        validate_shape(shape_);
        if (values_.size() != shape_volume(shape_)) {
            throw ShapeError("tensor of shape " + shape_string(shape_) + " needs "
                             + std::to_string(shape_volume(shape_)) + " values, got "
                             + std::to_string(values_.size()));
        }
    }

    static Tensor vector(std::initializer_list<double> values)
    {
        return Tensor({values.size()}, std::vector<double>(values));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }

    double& at(std::size_t i, std::size_t j, std::size_t k)
    {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const
    {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(double value) { std::fill(values_.begin(), values_.end(), value); }

    /// Same values under a new shape of equal volume.
    Tensor reshaped(Shape shape) const
    {
        return Tensor(std::move(shape), values_);
    }

    bool all_finite() const
    {
        for (double v : values_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    static void validate_shape(const Shape& shape)
    {
        if (shape.empty() || shape.size() > max_rank) {
            throw ShapeError("tensor rank must be in 1..3, got shape " + shape_string(shape));
        }
        for (std::size_t d : shape) {
            if (d == 0) {
                throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
            }
        }
    }

    Shape shape_;
    std::vector<double> values_;
};

inline void require_shape(const Tensor& t, const Shape& expected, const char* what)
{
    if (t.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got "
                         + shape_string(t.shape()));
    }
}

} // namespace windnet
