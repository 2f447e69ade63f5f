#pragma once

namespace smtabc::cli {

// Exit code 0 on success, 1 on usage errors, 2 on data errors.
int run(int argc, const char* const* argv);

}  // namespace smtabc::cli
