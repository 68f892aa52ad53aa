#pragma once

#define EQD_VERSION "0.1.0"
