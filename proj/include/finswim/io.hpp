#ifndef FINSWIM_IO_HPP
#define FINSWIM_IO_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "finswim/flow.hpp"
#include "finswim/net.hpp"

namespace finswim {

/**
 * Flow snapshot (.fld): a one-line text header
 *   FSFL 1 <nx> <ny> <h> <ox> <oy> <t>
 * followed by little-endian float32 payloads for u (staggered x-faces),
 * v (staggered y-faces), p and cell-centred vorticity, each row-major.
 */
void write_field(const std::string& path, const FlowField& f);

/** Read a .fld snapshot back (the stored vorticity is derived data and is
 *  checked for length but not returned). */
FlowField read_field(const std::string& path);

/** One network's weights plus the geometry needed to rebuild it. */
struct NetSnapshot {
    std::string role;  ///< "policy" or "value"
    NetConfig cfg;
    std::vector<NamedParam> params;
};

struct Checkpoint {
    uint32_t episode = 0;  ///< last finished training episode, 0 if untrained
    std::vector<NetSnapshot> nets;

    const NetSnapshot* find(const std::string& role) const;
};

/** Binary checkpoint: "FSCK" magic, format version, per-net config and named
 *  float32 parameter blocks. */
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/** Convenience: snapshot a live net. */
NetSnapshot snapshot_net(const std::string& role, const Net& net);

/** Copy snapshot weights into a net; names and shapes must match exactly. */
void restore_net(Net& net, const NetSnapshot& snap);

/** Incremental CSV writer; every row is flushed so a killed run leaves a
 *  readable prefix. Numbers are written with round-trip precision. */
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header,
              bool append = false);

    void row(const std::vector<double>& values);
    void row_text(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream f_;
};

/** Round-trip decimal formatting used in every CSV. */
std::string fmt_g17(double x);

/** Hex SHA-256 of a file's bytes. Throws IoError if unreadable. */
std::string sha256_file(const std::string& path);

/** Hex SHA-256 of a byte span. */
std::string sha256_bytes(const void* data, size_t n);

/** Read a whole file into a string (binary). Throws IoError. */
std::string slurp(const std::string& path);

}  // namespace finswim

#endif
