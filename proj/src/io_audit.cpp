#include "page/io_audit.hpp"

#include "page/common.hpp"

namespace page::io {

namespace {
std::vector<std::string> g_reads;
std::vector<std::string> g_writes;
}  // namespace

std::ifstream open_input(const std::string& path) {
  g_reads.push_back(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  g_writes.push_back(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open output file: " + path);
  return out;
}

void reset_audit() {
  g_reads.clear();
  g_writes.clear();
}

std::vector<std::string> files_read() { return g_reads; }
std::vector<std::string> files_written() { return g_writes; }

}  // namespace page::io
