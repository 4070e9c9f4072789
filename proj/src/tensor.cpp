#include "ptie/tensor.hpp"

#include <sstream>

namespace ptie {

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::string Tensor::shape_str() const { return ptie::shape_str(shape); }

}  // namespace ptie
