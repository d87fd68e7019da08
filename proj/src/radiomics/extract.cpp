#include "fibro/error.hpp"
#include "fibro/radiomics.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::radiomics {

namespace {

void append(FeatureVector& fv, const std::string& prefix, const NamedValues& values) {
    for (const auto& [name, value] : values) {
        fv.names.push_back(prefix + name);
        fv.values.push_back(value);
    }
}

FeatureVector extract_unchecked(const Volume& v, const Mask& m, const ExtractConfig& cfg) {
    FeatureVector fv;
    append(fv, "firstorder_", first_order_features(v, m, cfg.bin_count));
    append(fv, "shape3d_", shape_features_3d(m, v.spacing()).values);
    append(fv, "shape2d_", shape_features_2d(m, v.spacing()).values);
    const GrayLevelVolume g = discretize(v, m, cfg.bin_count);
    append(fv, "glcm_", build_glcm(g).features);
    append(fv, "glrlm_", build_glrlm(g).features);
    append(fv, "glszm_", build_glszm(g).features);
    append(fv, "ngtdm_", build_ngtdm(g).features);
    append(fv, "gldm_", build_gldm(g).features);
    return fv;
}

}  // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        const Volume v(Dims{1, 1, 1}, Spacing{}, 0.0);
        const Mask m(Dims{1, 1, 1}, true);
        return extract_unchecked(v, m, ExtractConfig{}).names;
    }();
    return names;
}

double FeatureVector::get(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorKind::SchemaError, "unknown feature " + name);
    return values[static_cast<std::size_t>(it - names.begin())];
}

FeatureVector extract_all(const Volume& v, const Mask& m, const ExtractConfig& cfg) {
    require_aligned(v, m);
    require_nonempty(m);
    FeatureVector fv = extract_unchecked(v, m, cfg);
    for (std::size_t k = 0; k < fv.values.size(); ++k)
        if (!std::isfinite(fv.values[k])) throw Error(ErrorKind::NonFiniteData, "feature " + fv.names[k] + " is not finite");
    return fv;
}

}  // namespace fibro::radiomics
