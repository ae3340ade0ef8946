#include "tabkan/checkpoint.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>

namespace tabkan::checkpoint {

json spec_to_json(const network::NetworkSpec& spec) {
    return json{{"variant", layers::variant_name(spec.variant)},
                {"widths", spec.widths},
                {"hyper",
                 {{"order", spec.hyper.order},
                  {"grid", spec.hyper.grid},
                  {"pade_q", spec.hyper.pade_q},
                  {"pade_k", spec.hyper.pade_k}}},
                {"seed", spec.seed}};
}

network::NetworkSpec spec_from_json(const json& j) {
    network::NetworkSpec spec;
    spec.variant = layers::variant_from_name(j.at("variant").get<std::string>());
    spec.widths = j.at("widths").get<std::vector<int>>();
    const json& h = j.at("hyper");
    spec.hyper.order = h.at("order").get<int>();
    spec.hyper.grid = h.at("grid").get<int>();
    spec.hyper.pade_q = h.at("pade_q").get<int>();
    spec.hyper.pade_k = h.at("pade_k").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

void save_checkpoint(const std::string& path, const network::Model& model) {
    json header = spec_to_json(model.spec());
    header["format"] = "tabkan-checkpoint";
    header["format_version"] = 1;
    header["param_count"] = model.param_count();
    json tensors = json::array();
    long layer_off = 0;
    for (std::size_t li = 0; li < model.depth(); ++li) {
        const layers::Layer& l = *model.layer_stack()[li];
        for (const auto& t : l.tensor_layout())
            tensors.push_back({{"layer", li},
                               {"name", t.name},
                               {"byte_offset", (layer_off + t.offset) * 8},
                               {"byte_size", t.size * 8}});
        layer_off += l.param_count();
    }
    header["tensors"] = std::move(tensors);

    std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::uint64_t len = head.size();
    unsigned char lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(len >> (8 * i));
    out.write(reinterpret_cast<const char*>(lenb), 8);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    Vector params = model.flatten();
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * 8));
    if (!out) throw std::runtime_error("write failed: " + path);
}

network::Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    unsigned char lenb[8];
    in.read(reinterpret_cast<char*>(lenb), 8);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(lenb[i]) << (8 * i);
    std::string head(len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    json header = json::parse(head);
    if (header.value("format", "") != "tabkan-checkpoint")
        throw std::runtime_error("not a tabkan checkpoint: " + path);

    network::Model model(spec_from_json(header));
    long expected = header.at("param_count").get<long>();
    if (expected != model.param_count())
        throw std::runtime_error("checkpoint parameter count mismatch: " + path);
    Vector params(model.param_count());
    in.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(params.size() * 8));
    if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
    model.unflatten(params);
    return model;
}

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int dlen = 0;
    if (!EVP_Digest(data, size, digest, &dlen, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out(dlen * 2, '0');
    for (unsigned int i = 0; i < dlen; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xf];
    }
    return out;
}

std::string fingerprint(const Matrix& x) {
    // row-major copy so the hash is layout-independent
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(x.rows()) * x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) buf.push_back(x(r, c));
    return sha256_hex(buf.data(), buf.size() * sizeof(double));
}

}  // namespace tabkan::checkpoint
