#include "gaxnet/nn/param_store.hpp"

namespace gaxnet::nn {

template class BasicParamStore<double>;

}  // namespace gaxnet::nn
