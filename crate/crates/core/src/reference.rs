//! Published synthesis and benchmark figures for the 8x8 prototype, kept as
//! reference data for regression checks and reports.

/// One row of the PE component breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentRow {
    pub name: &'static str,
    pub slices: f64,
    pub area_ratio: f64,
    pub delay_ns: f64,
    pub delay_ratio: f64,
}

pub const PE_COMPONENTS: [ComponentRow; 5] = [
    ComponentRow { name: "PE", slices: 910.0, area_ratio: 100.0, delay_ns: 25.6, delay_ratio: 100.0 },
    ComponentRow { name: "Multiplexer", slices: 58.0, area_ratio: 6.37, delay_ns: 1.3, delay_ratio: 12.89 },
    ComponentRow { name: "ALU", slices: 253.0, area_ratio: 27.80, delay_ns: 11.5, delay_ratio: 44.92 },
    ComponentRow { name: "Array multiplier", slices: 416.0, area_ratio: 45.71, delay_ns: 19.7, delay_ratio: 76.95 },
    ComponentRow { name: "Shift logic", slices: 156.0, area_ratio: 17.14, delay_ns: 2.5, delay_ratio: 17.58 },
];

/// One synthesized architecture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisRow {
    pub label: &'static str,
    pub shr: usize,
    pub shc: usize,
    /// 1 for RS designs, 2 for RSP designs, 0 for the base array.
    pub stages: usize,
    pub pe_slices: f64,
    pub sw_slices: Option<f64>,
    pub array_slices: f64,
    pub area_reduction: f64,
    pub pe_delay_ns: f64,
    pub sw_delay_ns: Option<f64>,
    pub array_delay_ns: f64,
    pub delay_reduction: f64,
}

const fn syn(
    label: &'static str,
    (shr, shc, stages): (usize, usize, usize),
    (pe_slices, sw_slices, array_slices, area_reduction): (f64, Option<f64>, f64, f64),
    (pe_delay_ns, sw_delay_ns, array_delay_ns, delay_reduction): (f64, Option<f64>, f64, f64),
) -> SynthesisRow {
    SynthesisRow {
        label,
        shr,
        shc,
        stages,
        pe_slices,
        sw_slices,
        array_slices,
        area_reduction,
        pe_delay_ns,
        sw_delay_ns,
        array_delay_ns,
        delay_reduction,
    }
}

pub const SYNTHESIS: [SynthesisRow; 9] = [
    syn("Base", (0, 0, 0), (910.0, None, 55739.0, 0.0), (25.6, None, 26.0, 0.0)),
    syn("RS#1", (1, 0, 1), (489.0, Some(10.0), 32446.0, 42.8), (15.3, Some(0.7), 26.85, -4.88)),
    syn("RS#2", (2, 0, 1), (489.0, Some(34.0), 36816.0, 34.05), (15.3, Some(1.2), 27.97, -9.25)),
    syn("RS#3", (2, 1, 1), (489.0, Some(55.0), 40577.0, 27.02), (15.3, Some(1.8), 28.89, -11.11)),
    syn("RS#4", (2, 2, 1), (489.0, Some(68.0), 44768.0, 19.69), (15.3, Some(2.0), 30.23, -16.27)),
    syn("RSP#1", (1, 0, 2), (489.0, Some(10.0), 33249.0, 40.35), (15.3, Some(0.7), 16.72, 34.69)),
    syn("RSP#2", (2, 0, 2), (489.0, Some(34.0), 38422.0, 31.07), (15.3, Some(1.2), 17.26, 32.58)),
    syn("RSP#3", (2, 1, 2), (489.0, Some(55.0), 42987.0, 22.88), (15.3, Some(1.8), 18.21, 29.97)),
    syn("RSP#4", (2, 2, 2), (489.0, Some(68.0), 47981.0, 13.92), (15.3, Some(2.0), 18.83, 27.58)),
];

/// Row labels of the benchmark tables, in order.
pub const ARCH_LABELS: [&str; 9] = [
    "Base", "RS#1", "RS#2", "RS#3", "RS#4", "RSP#1", "RSP#2", "RSP#3", "RSP#4",
];

/// One printed benchmark cell group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfCell {
    pub cycles: u32,
    pub et_ns: f64,
    pub dr_percent: f64,
    /// `None` where the table prints "-".
    pub stalls: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTable {
    pub kernel: &'static str,
    pub iterations: Option<u32>,
    /// Indexed like [`ARCH_LABELS`].
    pub rows: [PerfCell; 9],
}

const fn p(cycles: u32, et_ns: f64, dr_percent: f64, stalls: u32) -> PerfCell {
    PerfCell { cycles, et_ns, dr_percent, stalls: Some(stalls) }
}

const fn b(cycles: u32, et_ns: f64) -> PerfCell {
    PerfCell { cycles, et_ns, dr_percent: 0.0, stalls: None }
}

/// Livermore loop kernels.
pub const LIVERMORE: [KernelTable; 5] = [
    KernelTable {
        kernel: "Hydro",
        iterations: Some(32),
        rows: [
            b(15, 390.0),
            p(19, 510.15, -30.80, 4),
            p(15, 419.55, -1.07, 0),
            p(15, 433.35, -11.11, 0),
            p(15, 453.45, -16.27, 0),
            p(21, 351.12, 10.0, 2),
            p(19, 327.94, 15.92, 0),
            p(19, 345.99, 11.28, 0),
            p(19, 357.77, 8.26, 0),
        ],
    },
    KernelTable {
        kernel: "ICCG",
        iterations: Some(32),
        rows: [
            b(18, 468.0),
            p(18, 483.3, -3.26, 0),
            p(18, 503.46, -7.58, 0),
            p(18, 520.02, -11.11, 0),
            p(18, 544.14, 16.27, 0),
            p(19, 317.68, 32.12, 0),
            p(19, 327.94, 29.93, 0),
            p(19, 345.99, 26.07, 0),
            p(19, 357.77, 23.55, 0),
        ],
    },
    KernelTable {
        kernel: "Tri-diagonal",
        iterations: Some(64),
        rows: [
            b(17, 442.0),
            p(17, 456.45, -3.26, 0),
            p(17, 475.49, -7.58, 0),
            p(17, 491.13, -11.11, 0),
            p(17, 513.91, -16.27, 0),
            p(18, 300.96, 31.91, 0),
            p(18, 310.68, 29.71, 0),
            p(18, 327.78, 25.84, 0),
            p(18, 338.94, 23.31, 0),
        ],
    },
    KernelTable {
        kernel: "Inner product",
        iterations: Some(128),
        rows: [
            b(21, 546.0),
            p(21, 563.85, -3.26, 0),
            p(21, 587.37, -7.58, 0),
            p(21, 606.69, -11.11, 0),
            p(21, 634.83, -16.27, 0),
            p(22, 367.84, 32.64, 0),
            p(22, 379.72, 30.45, 0),
            p(22, 400.62, 26.62, 0),
            p(22, 414.26, 24.12, 0),
        ],
    },
    KernelTable {
        kernel: "State",
        iterations: Some(16),
        rows: [
            b(20, 520.0),
            p(35, 939.75, -80.72, 15),
            p(20, 559.4, -7.58, 0),
            p(20, 577.8, -11.11, 0),
            p(20, 604.6, -16.27, 0),
            p(37, 618.64, -18.96, 14),
            p(23, 396.68, 23.65, 0),
            p(23, 418.83, 19.45, 0),
            p(23, 433.09, 16.71, 0),
        ],
    },
];

/// Signal-processing kernels.
pub const DSP: [KernelTable; 4] = [
    KernelTable {
        kernel: "2D-FDCT",
        iterations: None,
        rows: [
            b(32, 832.0),
            p(56, 1503.6, -80.72, 24),
            p(38, 1062.86, -7.58, 6),
            p(32, 924.48, -11.11, 0),
            p(32, 967.36, -16.27, 0),
            p(64, 1070.08, -28.61, 24),
            p(40, 690.4, 17.01, 0),
            p(40, 728.4, 12.45, 0),
            p(40, 753.2, 9.47, 0),
        ],
    },
    KernelTable {
        kernel: "SAD",
        iterations: None,
        rows: [
            b(39, 1014.0),
            p(39, 1047.15, -3.26, 0),
            p(39, 1090.83, -7.58, 0),
            p(39, 1126.7, -11.11, 0),
            p(39, 1178.97, -16.27, 0),
            p(39, 652.08, 35.7, 0),
            p(39, 673.14, 33.61, 0),
            p(39, 710.19, 29.96, 0),
            p(39, 734.37, 27.57, 0),
        ],
    },
    KernelTable {
        kernel: "MVM",
        iterations: Some(64),
        rows: [
            b(19, 494.0),
            p(19, 510.15, -3.26, 0),
            p(19, 531.43, -7.58, 0),
            p(19, 548.91, -11.11, 0),
            p(19, 574.37, -16.27, 0),
            p(20, 334.4, 32.31, 0),
            p(20, 345.2, 30.12, 0),
            p(20, 364.2, 26.27, 0),
            p(20, 376.6, 23.76, 0),
        ],
    },
    KernelTable {
        kernel: "FFT multiplication loop",
        iterations: Some(32),
        rows: [
            b(23, 598.0),
            p(37, 993.45, -66.12, 14),
            p(23, 643.31, -7.58, 0),
            p(23, 664.47, -11.11, 0),
            p(23, 695.29, -16.27, 0),
            p(40, 668.8, -11.83, 13),
            p(27, 466.02, 22.07, 0),
            p(27, 491.67, 17.78, 0),
            p(27, 508.41, 14.98, 0),
        ],
    },
];

/// Peak multiplies per cycle of each benchmark kernel.
pub const PEAK_MULTIPLIES: [(&str, usize); 9] = [
    ("Hydro", 6),
    ("ICCG", 4),
    ("Tri-diagonal", 4),
    ("Inner product", 8),
    ("State", 7),
    ("2D-FDCT", 16),
    ("SAD", 0),
    ("MVM", 8),
    ("FFT multiplication loop", 8),
];

/// Printed cells known not to follow from their own row and base row:
/// `(kernel, arch label, column)`.
pub const INCONSISTENT_CELLS: [(&str, &str, &str); 6] = [
    ("Hydro", "RS#2", "dr"),
    ("Hydro", "RSP#1", "dr"),
    ("ICCG", "RS#4", "dr"),
    ("State", "RSP#2", "et"),
    ("2D-FDCT", "RS#2", "dr"),
    ("SAD", "RS#3", "et"),
];

pub fn all_kernel_tables() -> impl Iterator<Item = &'static KernelTable> {
    LIVERMORE.iter().chain(DSP.iter())
}

/// Array delay of a benchmark-table row, from the synthesis table.
pub fn array_delay(label: &str) -> Option<f64> {
    SYNTHESIS.iter().find(|r| r.label == label).map(|r| r.array_delay_ns)
}
