#pragma once

#include <string>

#include "transferda/dato.hpp"
#include "transferda/qmda.hpp"

namespace tda {

// Versioned little-endian binary containers. Save -> load -> save is
// byte-identical; corrupt magic, unknown version and truncation raise
// BadMagicError / BadVersionError / TruncatedFileError respectively.
void save_model(const DatoModel& model, const std::string& path);
void save_model(const QmdaModel& model, const std::string& path);

DatoModel load_dato_model(const std::string& path);
QmdaModel load_qmda_model(const std::string& path);

}  // namespace tda
