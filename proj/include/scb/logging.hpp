#pragma once

namespace scb {

/// Reads SCB_LOG (trace, debug, info, warn, error, critical, off) and sets the
/// default logger level. Unset means warn.
void configure_logging();

}  // namespace scb
