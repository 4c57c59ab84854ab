#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace easynet {

#ifdef EASYNET_REAL_DOUBLE
using real = double;
#else
using real = float;
#endif

/// NCHW extents. Parameters reuse the same struct (n = out channels,
/// c = in channels, h = w = kernel size).
struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense float tensor in NCHW order with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, real fill = real(0));

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<real> data() { return data_; }
    std::span<const real> data() const { return data_; }
    real* raw() { return data_.data(); }
    const real* raw() const { return data_.data(); }

    /// Pointer to the H×W plane of sample n, channel c.
    real* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
    const real* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

    real& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    real at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
    real& operator[](std::size_t i) { return data_[i]; }
    real operator[](std::size_t i) const { return data_[i]; }

    void fill(real v);
    void zero() { fill(real(0)); }
    /// Drops content and resizes; contents are zeroed.
    void reset(Shape shape);

    /// Copy of sample n as a batch of one.
    Tensor sample(int n) const;
    /// Sets sample n from a batch-of-one tensor of matching C×H×W.
    void set_sample(int n, const Tensor& src);

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(real s);

    bool all_finite() const;
    std::size_t count_nonfinite() const;

private:
    std::size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    Shape shape_{};
    std::vector<real> data_;
};

/// Stacks same-sized tensors along the channel axis.
Tensor concat_channels(std::span<const Tensor* const> parts);
/// Stacks batch-of-one tensors into one batch.
Tensor stack_batch(std::span<const Tensor* const> samples);
/// Channel slice [begin, begin + count) of every sample.
Tensor slice_channels(const Tensor& t, int begin, int count);

/// Throws InvalidArgument naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

} // namespace easynet
