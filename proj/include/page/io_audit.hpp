#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace page::io {

// Every dataset/checkpoint file touched by the library is opened through
// these helpers so tests can audit exactly which files a stage read.
std::ifstream open_input(const std::string& path);
std::ofstream open_output(const std::string& path);

void reset_audit();
std::vector<std::string> files_read();
std::vector<std::string> files_written();

}  // namespace page::io
