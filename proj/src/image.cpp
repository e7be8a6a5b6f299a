// image.cpp

#include "mvmorph/image.hpp"

#include <sstream>

#include "mvmorph/errors.hpp"

namespace mvmorph {

MvImage::MvImage(Manifold m, int n1, int n2) : manifold_(std::move(m)), n1_(n1), n2_(n2) {
    if (n1 < 1 || n2 < 1) throw InvalidArgument("MvImage: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(n1) * n2 * manifold_.point_dim(), 0.0);
}

MvImage::MvImage(Manifold m, int n1, int n2, VecCRef value) : MvImage(std::move(m), n1, n2) {
    if (value.size() != dof()) throw InvalidArgument("MvImage: fill value has wrong length");
    for (int i = 0; i < n1_; ++i)
        for (int j = 0; j < n2_; ++j) pixel(i, j) = value;
}

void MvImage::validate(double tol) const {
    for (int i = 0; i < n1_; ++i)
        for (int j = 0; j < n2_; ++j) {
            if (!manifold_.contains(pixel(i, j), tol)) {
                std::ostringstream os;
                os << "pixel (" << i << ", " << j << ") [index " << static_cast<long>(i) * n2_ + j
                   << "] is not a point of " << manifold_.name();
                throw InvalidArgument(os.str());
            }
        }
}

} // namespace mvmorph
