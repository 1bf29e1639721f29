#include "neuroembed/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "neuroembed/binary_io.hpp"

namespace neuroembed {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string encode_container(const std::vector<NeuronGraph>& graphs) {
    ByteWriter w;
    w.put_raw("MGRF", 4);
    w.put<std::uint16_t>(container_version);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(graphs.size()));
    for (const auto& g: graphs) {
        w.put_string(g.meta.source);
        w.put_string(g.meta.dataset_tag);
        w.put<std::int32_t>(g.soma_id);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(g.size()));
        for (const auto& node: g.nodes) {
            w.put<std::int32_t>(node.id);
            w.put<double>(node.position.x);
            w.put<double>(node.position.y);
            w.put<double>(node.position.z);
            w.put<double>(node.radius);
            w.put<std::uint8_t>(static_cast<std::uint8_t>(node.compartment));
        }
        w.put<std::uint32_t>(static_cast<std::uint32_t>(g.edges.size()));
        for (auto [a, b]: g.edges) {
            w.put<std::int32_t>(a);
            w.put<std::int32_t>(b);
        }
    }
    return w.bytes();
}

std::vector<NeuronGraph> decode_container(std::string_view bytes) {
    ByteReader r(bytes, "graph container");
    char magic[4];
    r.get_raw(magic, 4);
    if (std::string_view(magic, 4) != "MGRF") throw IoError("graph container: bad magic");
    const auto version = r.get<std::uint16_t>();
    if (version != container_version) {
        throw VersionError("graph container: unsupported version " + std::to_string(version));
    }
    const auto count = r.get<std::uint32_t>();
    std::vector<NeuronGraph> graphs;
    graphs.reserve(count);
    for (std::uint32_t gi = 0; gi < count; ++gi) {
        GraphMeta meta;
        meta.source = r.get_string();
        meta.dataset_tag = r.get_string();
        const int soma_id = r.get<std::int32_t>();
        const auto n = r.get<std::uint32_t>();
        std::vector<SkeletonNode> nodes(n);
        for (auto& node: nodes) {
            node.id = r.get<std::int32_t>();
            node.position.x = r.get<double>();
            node.position.y = r.get<double>();
            node.position.z = r.get<double>();
            node.radius = r.get<double>();
            const auto c = r.get<std::uint8_t>();
            if (c >= compartment_count) throw IoError("graph container: bad compartment code");
            node.compartment = static_cast<Compartment>(c);
        }
        const auto m = r.get<std::uint32_t>();
        std::vector<std::pair<int, int>> edges(m);
        for (auto& [a, b]: edges) {
            a = r.get<std::int32_t>();
            b = r.get<std::int32_t>();
        }
        graphs.push_back(make_graph(std::move(nodes), std::move(edges), soma_id, std::move(meta)));
    }
    if (!r.at_end()) throw IoError("graph container: trailing bytes");
    return graphs;
}

void write_container(const std::string& path, const std::vector<NeuronGraph>& graphs) {
    write_file(path, encode_container(graphs));
}

std::vector<NeuronGraph> read_container(const std::string& path) {
    return decode_container(read_file(path));
}

} // namespace neuroembed
