#include "easynet/tensor.hpp"

#include "easynet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace easynet {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, real fill) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
        throw InvalidArgument("negative tensor extent " + shape.str());
    }
    data_.assign(shape.numel(), fill);
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reset(Shape shape) {
    shape_ = shape;
    data_.assign(shape.numel(), real(0));
}

Tensor Tensor::sample(int n) const {
    Tensor out({1, shape_.c, shape_.h, shape_.w});
    const std::size_t len = out.numel();
    std::memcpy(out.raw(), data_.data() + static_cast<std::size_t>(n) * len, len * sizeof(real));
    return out;
}

void Tensor::set_sample(int n, const Tensor& src) {
    if (src.n() != 1 || src.c() != shape_.c || src.h() != shape_.h || src.w() != shape_.w) {
        throw InvalidArgument("set_sample: shape " + src.shape().str() + " does not fit " +
                              shape_.str());
    }
    const std::size_t len = src.numel();
    std::memcpy(data_.data() + static_cast<std::size_t>(n) * len, src.raw(), len * sizeof(real));
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "tensor +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(real s) {
    for (auto& v : data_) v *= s;
    return *this;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](real v) { return std::isfinite(v); });
}

std::size_t Tensor::count_nonfinite() const {
    return static_cast<std::size_t>(
        std::count_if(data_.begin(), data_.end(), [](real v) { return !std::isfinite(v); }));
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
    if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
    const Shape first = parts.front()->shape();
    int channels = 0;
    for (const Tensor* t : parts) {
        if (t->n() != first.n || t->h() != first.h || t->w() != first.w) {
            throw InvalidArgument("concat_channels: mismatched shapes " + first.str() + " vs " +
                                  t->shape().str());
        }
        channels += t->c();
    }
    Tensor out({first.n, channels, first.h, first.w});
    const std::size_t plane = first.plane();
    for (int n = 0; n < first.n; ++n) {
        int c0 = 0;
        for (const Tensor* t : parts) {
            std::memcpy(out.plane(n, c0), t->plane(n, 0), plane * t->c() * sizeof(real));
            c0 += t->c();
        }
    }
    return out;
}

Tensor stack_batch(std::span<const Tensor* const> samples) {
    if (samples.empty()) throw InvalidArgument("stack_batch: no inputs");
    const Shape s = samples.front()->shape();
    Tensor out({static_cast<int>(samples.size()), s.c, s.h, s.w});
    for (std::size_t i = 0; i < samples.size(); ++i) out.set_sample(static_cast<int>(i), *samples[i]);
    return out;
}

Tensor slice_channels(const Tensor& t, int begin, int count) {
    if (begin < 0 || count < 0 || begin + count > t.c()) {
        throw InvalidArgument("slice_channels: range out of bounds");
    }
    Tensor out({t.n(), count, t.h(), t.w()});
    const std::size_t plane = t.shape().plane();
    for (int n = 0; n < t.n(); ++n) {
        std::memcpy(out.plane(n, 0), t.plane(n, begin), plane * count * sizeof(real));
    }
    return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw InvalidArgument(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                              b.shape().str());
    }
}

} // namespace easynet
